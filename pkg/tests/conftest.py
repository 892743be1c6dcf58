from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from boolfpp.sampler import Configuration  # noqa: E402

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_config(rng: np.random.Generator, max_balls: int = 6, half_width: float = 5.0,
                  r_lo: float = 0.2, r_hi: float = 2.0) -> Configuration:
    n = int(rng.integers(0, max_balls + 1))
    centers = rng.uniform(-half_width, half_width, size=(n, 2))
    radii = rng.uniform(r_lo, r_hi, size=n)
    return Configuration.from_balls(np.column_stack([centers, radii]) if n else [], half_width=half_width)


coord = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)
point2 = st.tuples(coord, coord)
radius = st.floats(0.1, 2.5, allow_nan=False)
balls2 = st.lists(st.tuples(coord, coord, radius), max_size=6)


@st.composite
def configs(draw, max_size: int = 6) -> Configuration:
    balls = draw(st.lists(st.tuples(coord, coord, radius), max_size=max_size))
    return Configuration.from_balls(balls, half_width=8.0)


@st.composite
def paths(draw, min_points: int = 2, max_points: int = 6) -> np.ndarray:
    pts = draw(st.lists(point2, min_size=min_points, max_size=max_points, unique=True))
    return np.array(pts, dtype=float)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260101)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
