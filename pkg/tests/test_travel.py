from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import configs, point2, random_config
from hypothesis import assume, given
from hypothesis import strategies as st
from oracles import t_square_enumeration

from boolfpp.geometry import is_good, path_time
from boolfpp.measures import MeasureSpec
from boolfpp.sampler import Configuration
from boolfpp.travel import (
    ComponentGraph,
    TerminalSet,
    TooManyUsefulBalls,
    annulus_time,
    mu_square_probe,
    radial_time,
    set_distance,
    t_square,
    travel_time,
    useful_balls,
)

P = TerminalSet.point


def cfg(*balls, hw: float = 12.0) -> Configuration:
    return Configuration.from_balls(list(balls), half_width=hw)


def T(a, b, config) -> float:
    return travel_time(P(a), P(b), config).time


# --- terminal sets ---------------------------------------------------------------


def test_parse_terminals():
    assert TerminalSet.parse("point:1,2") == P((1, 2))
    assert TerminalSet.parse("sphere:7") == TerminalSet.sphere(7.0)
    assert TerminalSet.parse("ball:2@5,0") == TerminalSet.ball(2.0, (5.0, 0.0))
    assert TerminalSet.parse("outside:3") == TerminalSet.ball_complement(3.0)
    for bad in ("point:1", "cube:1", "sphere:-1", "ball:x"):
        with pytest.raises(ValueError):
            TerminalSet.parse(bad)


def test_set_distance_examples():
    assert set_distance(P((0, 0)), TerminalSet.ball(2, (5, 0))) == 3.0
    assert set_distance(TerminalSet.ball(2, (3, 0)), TerminalSet.ball(2, (6, 0))) == 0.0
    assert set_distance(P((0, 0)), TerminalSet.sphere(7)) == 7.0


@given(point2, st.floats(0.1, 3), point2, st.floats(0.1, 3))
def test_set_distance_symmetric(c1, r1, c2, r2):
    a, b = TerminalSet.ball(r1, c1), TerminalSet.ball(r2, c2)
    assert abs(set_distance(a, b) - set_distance(b, a)) <= 1e-12
    assert abs(set_distance(a, b) - max(0.0, math.dist(c1, c2) - r1 - r2)) <= 1e-12


# --- closed-form travel times -----------------------------------------------------


def test_travel_examples():
    assert T((0, 0), (10, 0), cfg()) == 10.0
    assert abs(T((0, 0), (10, 0), cfg((5, 0, 2))) - 6.0) <= 1e-12
    assert abs(T((0, 0), (10, 0), cfg((3, 0, 2), (6, 0, 2))) - 3.0) <= 1e-12


def test_radial_examples():
    assert radial_time(cfg(), 10).time == 10.0
    assert radial_time(cfg((0, 0, 5)), 4).time == 0.0
    assert abs(radial_time(cfg((5, 0, 2)), 10).time - 6.0) <= 1e-12


def test_annulus_examples():
    assert annulus_time(cfg(), 2, 5).time == 3.0
    assert annulus_time(cfg((3.5, 0, 2)), 2, 5).time == 0.0


def test_window_warning_flag():
    res = travel_time(P((0, 0)), P((10, 0)), cfg((5, 0, 2), hw=6.0))
    assert res.window_warning
    assert not travel_time(P((0, 0)), P((10, 0)), cfg((5, 0, 2))).window_warning


# --- geodesics --------------------------------------------------------------------


@pytest.mark.parametrize("balls", [[], [(5, 0, 2)], [(3, 0, 2), (6, 0, 2)], [(2, 3, 2.5), (6, -2, 1.5)]])
def test_geodesic_examples(balls):
    c = cfg(*balls)
    res = travel_time(P((0, 0)), P((10, 0)), c, geodesic=True)
    assert is_good(res.geodesic, c)
    assert abs(path_time(res.geodesic, c) - res.time) <= 1e-9


@given(configs(), point2, point2)
def test_geodesic_contract(config, a, b):
    # a terminal sitting exactly on a center (probability zero) has no good geodesic
    assume(config.radius_at(a) == 0 and config.radius_at(b) == 0)
    res = travel_time(P(a), P(b), config, geodesic=True)
    assert abs(path_time(res.geodesic, config) - res.time) <= 1e-9
    assert is_good(res.geodesic, config)


@given(configs(), st.floats(0.5, 7.0))
def test_radial_geodesic_reaches_sphere(config, s):
    res = radial_time(config, s, geodesic=True)
    end = res.geodesic.points[-1]
    assert abs(np.linalg.norm(end) - s) <= 1e-9
    assert abs(path_time(res.geodesic, config) - res.time) <= 1e-9


# --- metric properties ---------------------------------------------------------------


@given(configs(), point2, point2, point2)
def test_triangle_inequality(config, a, b, c):
    g = ComponentGraph(config)
    ac = g.query(P(a), P(c)).time
    assert ac <= g.query(P(a), P(b)).time + g.query(P(b), P(c)).time + 1e-9


@given(configs(), point2, point2, point2)
def test_one_lipschitz(config, a, a2, b):
    g = ComponentGraph(config)
    assert abs(g.query(P(a), P(b)).time - g.query(P(a2), P(b)).time) <= math.dist(a, a2) + 1e-9


@given(configs(), point2, point2, st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 2)))
def test_adding_a_ball_never_increases_time(config, a, b, ball):
    more = config.with_balls([ball[:2]], [ball[2]])
    assert T(a, b, more) <= T(a, b, config) + 1e-9


@given(configs(), point2, point2, st.floats(0.0, 1.0))
def test_inflating_radii_never_increases_time(config, a, b, grow):
    bigger = Configuration(config.centers, config.radii + grow, config.window)
    assert T(a, b, bigger) <= T(a, b, config) + 1e-9


@given(configs(), st.floats(0.5, 3.0), st.floats(0.5, 4.0))
def test_annulus_sandwich(config, inner, gap):
    assert annulus_time(config, inner, inner + gap).sandwich_holds


@given(configs(), point2, point2)
def test_time_bounded_by_distance(config, a, b):
    assert 0.0 <= T(a, b, config) <= math.dist(a, b) + 1e-12


# --- disjoint-resource time ---------------------------------------------------------


def test_t_square_worked_example():
    anchors = [(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)]
    assert t_square(anchors, cfg((2, 0, 1))) == 3.0


def test_t_square_single_leg_and_empty():
    c = cfg((5, 0, 2), (1, 3, 1))
    assert t_square([(0, 0), (10, 0)], c) == T((0, 0), (10, 0), c)
    assert t_square([(0, 0), (2, 0), (4, 0), (6, 0)], cfg()) == 6.0


def test_t_square_cap_refuses():
    balls = [(x, 0.0, 0.3) for x in np.linspace(0.5, 9.5, 16)]
    with pytest.raises(TooManyUsefulBalls):
        t_square([(0, 0), (5, 0), (10, 0)], cfg(*balls), cap=14)


def test_useless_balls_filtered():
    per_leg = useful_balls(np.array([(0.0, 0.0), (2.0, 0.0)]), cfg((1, 5, 0.5), (1, 0, 0.5)))
    assert per_leg[0].tolist() == [1]


def test_t_square_matches_enumeration_on_random_instances():
    rng = np.random.default_rng(31)
    for _ in range(30):
        c = random_config(rng, max_balls=5, half_width=4.0, r_lo=0.2, r_hi=1.2)
        anchors = np.array([(-3.0, 0.0), (0.0, 0.0), (3.0, 0.0)])
        value = t_square(anchors, c)
        assert value == pytest.approx(t_square_enumeration(anchors, c), abs=1e-12)
        legs = sum(T(anchors[j], anchors[j + 1], c) for j in range(2))
        assert value >= legs - 1e-12


def test_mu_square_probe_empty_and_range():
    sq, pt = mu_square_probe(MeasureSpec(), 2.0, 3, 4, 1)
    assert sq.mean == 1.0 and pt.mean == 1.0
    sq, pt = mu_square_probe(MeasureSpec.dirac(0.05, 0.8), 2.0, 3, 20, 1)
    assert 0.0 <= pt.mean <= sq.mean <= 1.0
