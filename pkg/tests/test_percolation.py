from __future__ import annotations

import numpy as np
import pytest
from conftest import configs
from hypothesis import given
from hypothesis import strategies as st
from oracles import brute_components

from boolfpp.measures import MeasureSpec
from boolfpp.percolation import components, crossing_event, crossing_probability, overlap_pairs
from boolfpp.sampler import Configuration, Window


def partition(idx) -> set[frozenset[int]]:
    return {frozenset(m.tolist()) for m in idx.members}


def test_component_examples():
    assert components(Configuration.from_balls([(3, 0, 2), (6, 0, 2)])).n_components == 1
    assert components(Configuration.from_balls([(0, 0, 1), (3, 0, 1)])).n_components == 2
    assert components(Configuration.empty()).n_components == 0


def test_tangent_balls_are_separate():
    assert components(Configuration.from_balls([(0, 0, 1), (2, 0, 1)])).n_components == 2


def test_labels_follow_lowest_index():
    idx = components(Configuration.from_balls([(10, 0, 1), (0, 0, 1), (10.5, 0, 1)]))
    assert idx.labels.tolist() == [0, 1, 0]


@given(configs(max_size=12))
def test_components_match_breadth_first_search(config):
    assert partition(components(config)) == set(brute_components(config))


def test_grid_and_all_pairs_agree():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(0, 120))
        cfg = Configuration.from_balls(
            np.column_stack([rng.uniform(-10, 10, (n, 2)), rng.uniform(0.05, 1.5, n)]) if n else [], half_width=12
        )
        a = {tuple(p) for p in overlap_pairs(cfg, "all").tolist()}
        b = {tuple(p) for p in overlap_pairs(cfg, "grid").tolist()}
        assert a == b


def test_brute_force_match_at_two_hundred_balls():
    rng = np.random.default_rng(8)
    cfg = Configuration.from_balls(np.column_stack([rng.uniform(-10, 10, (200, 2)), rng.uniform(0.1, 1.0, 200)]),
                                   half_width=11)
    assert partition(components(cfg)) == set(brute_components(cfg))


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        overlap_pairs(Configuration.from_balls([(0, 0, 1), (1, 0, 1)]), "fast")


def test_crossing_examples():
    r = 2.0
    big = Configuration.from_balls([(0, 0, 3 * r)], half_width=2 * r + 3 * r)
    assert crossing_event(big, r)
    assert not crossing_event(Configuration.empty(half_width=2 * r), r)
    far = Configuration.from_balls([(4.5 * r, 0, 0.2), (0, -4.5 * r, 0.2)], half_width=6 * r)
    assert not crossing_event(far, r)


def test_crossing_refuses_small_window():
    with pytest.raises(ValueError):
        crossing_event(Configuration.from_balls([(0, 0, 1)], half_width=2.0), 1.0)


@given(configs(max_size=8), st.floats(0.0, 1.0))
def test_crossing_monotone_in_radius_inflation(config, grow):
    r = 1.0
    cfg = Configuration(config.centers, config.radii, Window(2, 11.5))
    bigger = Configuration(cfg.centers, cfg.radii + grow, cfg.window)
    if crossing_event(cfg, r):
        assert crossing_event(bigger, r)
        assert crossing_event(cfg.with_balls([(0.0, 0.0)], [0.5]), r)


def test_crossing_probability_low_intensity():
    rep = crossing_probability(MeasureSpec.dirac(1e-4, 1.0), 5.0, 1000, 3)
    assert rep.mean < 0.05


def test_crossing_probability_with_spanning_obstacle():
    span = Configuration.from_balls([(0, 0, 3.0)], half_width=1.0)
    rep = crossing_probability(MeasureSpec.dirac(0.05, 0.5), 1.0, 50, 3, extra_balls=span)
    assert rep.mean == 1.0


def test_crossing_probability_trend_in_r():
    nu = MeasureSpec.dirac(0.2, 1.0)
    reps = [crossing_probability(nu, r, 400, 11) for r in (1.0, 2.0, 4.0)]
    for a, b in zip(reps, reps[1:]):
        assert b.mean <= a.mean + 2 * np.hypot(a.stderr, b.stderr)
