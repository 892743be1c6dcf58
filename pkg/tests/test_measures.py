from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from boolfpp.measures import (
    AdmissibleMap,
    MeasureSpec,
    dominates,
    greedy_integral,
    inverse_map,
    map_absdiff,
    map_le,
    map_max,
    map_min,
    map_moment,
    moment,
    moment_bound_constant,
    parse_measure,
    pushforward,
    survival,
)

TWO_ONE_THREE = MeasureSpec.from_pairs([(1.0, 2.0), (3.0, 1.0)])

atom_radius = st.floats(0.05, 5.0, allow_nan=False)
atom_mass = st.floats(0.01, 3.0, allow_nan=False)
measures = st.lists(st.tuples(atom_radius, atom_mass), max_size=5).map(MeasureSpec.from_pairs)


def step_map(*pairs) -> AdmissibleMap:
    return AdmissibleMap(tuple((Fraction(u), v) for u, v in pairs))


# --- construction -------------------------------------------------------------


def test_rejects_non_positive_atoms():
    with pytest.raises(ValueError):
        MeasureSpec(((0.0, 1.0),))
    with pytest.raises(ValueError):
        MeasureSpec(((1.0, -1.0),))
    with pytest.raises(ValueError):
        MeasureSpec(((2.0, 1.0), (1.0, 1.0)))


def test_from_pairs_merges_and_sorts():
    nu = MeasureSpec.from_pairs([(3.0, 1.0), (1.0, 0.5), (1.0, 1.5)])
    assert nu.atoms == ((1.0, 2.0), (3.0, 1.0))


def test_parse_measure_round_trip():
    assert parse_measure("2@1,1@3") == TWO_ONE_THREE
    assert parse_measure("").is_empty()
    with pytest.raises(ValueError):
        parse_measure("2:1")


def test_dict_round_trip():
    assert MeasureSpec.from_dict(TWO_ONE_THREE.to_dict()) == TWO_ONE_THREE
    m = inverse_map(TWO_ONE_THREE)
    assert AdmissibleMap.from_dict(m.to_dict()) == m


# --- survival ---------------------------------------------------------------------


def test_survival_examples():
    assert survival(MeasureSpec.dirac(0.1, 2.0), 1.0) == 0.1
    assert survival(TWO_ONE_THREE, 2.0) == 1.0
    assert survival(TWO_ONE_THREE, 3.5) == 0.0


@given(measures, st.floats(0.01, 6.0), st.floats(0.01, 6.0))
def test_survival_non_increasing(nu, a, b):
    lo, hi = sorted((a, b))
    assert survival(nu, hi) <= survival(nu, lo)


# --- inverse map and pushforward ----------------------------------------------


def test_inverse_map_dirac():
    m = inverse_map(MeasureSpec.dirac(0.3, 1.5))
    assert m(0.1) == 1.5 and m(0.3) == 1.5 and m(0.31) == 0.0


def test_inverse_map_two_atoms():
    m = inverse_map(TWO_ONE_THREE)
    assert [m(u) for u in (0.5, 1.0, 1.5, 3.0, 3.01)] == [3.0, 3.0, 1.0, 1.0, 0.0]


def test_inverse_map_empty_is_zero():
    m = inverse_map(MeasureSpec())
    assert m.support_end == 0.0 and m(0.7) == 0.0


def test_pushforward_examples():
    assert pushforward(step_map((0.4, 2.0))) == MeasureSpec.dirac(0.4, 2.0)
    assert pushforward(inverse_map(TWO_ONE_THREE)) == TWO_ONE_THREE
    assert pushforward(step_map((1, 0.0))).is_empty()


@given(measures)
def test_round_trip_is_exact(nu):
    assert pushforward(inverse_map(nu)) == nu


# --- domination ------------------------------------------------------------------


def test_dominates_examples():
    assert dominates(MeasureSpec.dirac(0.1, 1.0), MeasureSpec.dirac(0.1, 2.0))
    assert not dominates(MeasureSpec.from_pairs([(1, 1), (3, 1)]), MeasureSpec.dirac(2.0, 2.0))
    assert dominates(TWO_ONE_THREE, TWO_ONE_THREE)


@given(measures, measures)
def test_domination_iff_ordered_maps(a, b):
    assert dominates(a, b) == map_le(inverse_map(a), inverse_map(b))


@given(measures, measures)
def test_greedy_integral_monotone_under_domination(a, b):
    if dominates(a, b):
        assert greedy_integral(a, 2).value <= greedy_integral(b, 2).value * (1 + 1e-12) + 1e-15


# --- map lattice operations -------------------------------------------------------


def test_map_operations_example():
    m1, m2 = step_map((1, 2.0)), step_map((2, 3.0))
    assert map_max(m1, m2) == step_map((2, 3.0))
    assert map_min(m1, m2) == step_map((1, 2.0))
    assert map_absdiff(m1, m2) == step_map((1, 1.0), (2, 3.0))
    assert map_absdiff(m1, m1).steps == ()


@given(measures, measures, st.floats(0.0, 10.0))
def test_min_and_max_bracket_inputs(a, b, u):
    m1, m2 = inverse_map(a), inverse_map(b)
    lo, hi = map_min(m1, m2)(u), map_max(m1, m2)(u)
    assert lo <= m1(u) <= hi and lo <= m2(u) <= hi
    assert map_absdiff(m1, m2)(u) == abs(m1(u) - m2(u))


def test_map_validation():
    with pytest.raises(ValueError):
        step_map((1, 1.0), (1, 2.0))
    with pytest.raises(ValueError):
        step_map((1, -1.0))


# --- integrals and moments --------------------------------------------------------


@pytest.mark.parametrize("lam,R,d", [(0.1, 2.0, 2), (3.0, 0.5, 3), (1.0, 1.0, 2)])
def test_greedy_integral_single_atom(lam, R, d):
    assert math.isclose(greedy_integral(MeasureSpec.dirac(lam, R), d).value, lam ** (1 / d) * R, rel_tol=1e-12)


def test_greedy_integral_two_atoms():
    assert abs(greedy_integral(TWO_ONE_THREE, 2).value - (math.sqrt(3) + 2)) <= 1e-12
    assert greedy_integral(MeasureSpec(), 2).value == 0.0


@given(measures)
def test_greedy_integral_matches_quadrature(nu):
    if nu.is_empty():
        return
    edges = [0.0, *nu.radii]
    total = sum(quad(lambda r: survival(nu, r) ** 0.5, a, b)[0] for a, b in zip(edges, edges[1:]) if b > a)
    assert math.isclose(greedy_integral(nu, 2).value, total, rel_tol=1e-8, abs_tol=1e-12)


def test_moment_examples():
    assert math.isclose(moment(MeasureSpec.dirac(0.1, 2.0), 2), 0.4, rel_tol=1e-15)
    assert moment(MeasureSpec(), 3) == 0.0


@given(measures, st.floats(0.5, 4.0))
def test_map_moment_equals_measure_moment(nu, p):
    assert math.isclose(map_moment(inverse_map(nu), p), moment(nu, p), rel_tol=1e-12, abs_tol=1e-300)


def test_moment_bound_constant_against_quadrature():
    d, lam, eta = 2, 0.1, 1.0
    num = quad(lambda s: min(lam, s ** -(d + eta)) ** (1 / d), 0, np.inf, limit=200, points=None)[0]
    assert math.isclose(moment_bound_constant(d, lam, eta), num, rel_tol=1e-7)


@given(measures, st.floats(0.2, 2.0))
def test_greedy_integral_below_moment_bound(nu, eta):
    if nu.is_empty():
        return
    d = 2
    m = inverse_map(nu)
    lhs = greedy_integral(pushforward(m), d).value
    p = d + eta
    rhs = moment_bound_constant(d, nu.total_mass, eta) * map_moment(m, p) ** (1 / p)
    assert lhs <= rhs * (1 + 1e-9)
