"""Seeded sampling of the base Poisson process and coupled Boolean configurations.

The base process lives on ``window x (0, u_max]`` with unit intensity.  A
Boolean configuration is obtained by pushing each mark ``u`` through an
admissible map; two maps applied to the same base give coupled configurations
whose radii are ordered center by center whenever the maps are ordered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .measures import AdmissibleMap, MeasureSpec, inverse_map

__all__ = [
    "Window",
    "BaseProcess",
    "Configuration",
    "replica_rng",
    "derive_seed",
    "sample_base",
    "apply_map",
    "sample_config",
    "window_for_radius",
    "truncate_above",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Window:
    """Axis-aligned box ``[-half_width, half_width]^d``."""

    d: int
    half_width: float

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("dimension must be >= 2")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.d


@dataclass(frozen=True, eq=False)
class BaseProcess:
    centers: np.ndarray
    marks: np.ndarray
    u_max: float
    window: Window
    master_seed: int
    replica_id: int

    def __len__(self) -> int:
        return len(self.marks)


@dataclass(frozen=True, eq=False)
class Configuration:
    """A finite realisation of the Boolean model: open balls ``B(center, radius)``."""

    centers: np.ndarray
    radii: np.ndarray
    window: Window
    _lookup: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=float).reshape(-1, self.window.d)
        radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(centers) != len(radii):
            raise ValueError("centers and radii must have the same length")
        if np.any(radii <= 0):
            raise ValueError("radii must be positive")
        object.__setattr__(self, "centers", _frozen(centers))
        object.__setattr__(self, "radii", _frozen(radii))

    @classmethod
    def from_balls(cls, balls, d: int = 2, half_width: float | None = None) -> Configuration:
        """Build from ``[(x1, ..., xd, r), ...]``; the window defaults to a tight box."""
        arr = np.asarray(balls, dtype=float).reshape(-1, d + 1)
        centers, radii = arr[:, :d], arr[:, d]
        if half_width is None:
            half_width = float(np.max(np.abs(centers), initial=0.0) + np.max(radii, initial=0.0)) or 1.0
        return cls(centers, radii, Window(d, half_width))

    @classmethod
    def empty(cls, d: int = 2, half_width: float = 1.0) -> Configuration:
        return cls(np.zeros((0, d)), np.zeros(0), Window(d, half_width))

    @property
    def d(self) -> int:
        return self.window.d

    def __len__(self) -> int:
        return len(self.radii)

    @property
    def max_radius(self) -> float:
        return float(self.radii.max()) if len(self.radii) else 0.0

    def radius_at(self, point) -> float:
        """``r(c)``: radius of the ball centred exactly at ``point``, 0 if none."""
        if self._lookup is None:
            lookup: dict[tuple, float] = {}
            for c, r in zip(map(tuple, self.centers.tolist()), self.radii.tolist()):
                lookup[c] = max(r, lookup.get(c, 0.0))
            object.__setattr__(self, "_lookup", lookup)
        return self._lookup.get(tuple(float(x) for x in point), 0.0)

    def with_balls(self, centers, radii) -> Configuration:
        """A copy with extra balls appended."""
        centers = np.asarray(centers, dtype=float).reshape(-1, self.d)
        return Configuration(
            np.vstack([self.centers, centers]),
            np.concatenate([self.radii, np.asarray(radii, dtype=float).reshape(-1)]),
            self.window,
        )

    def subset(self, mask) -> Configuration:
        return Configuration(self.centers[mask], self.radii[mask], self.window)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "half_width": self.window.half_width,
            "balls": [list(c) + [r] for c, r in zip(self.centers.tolist(), self.radii.tolist())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Configuration:
        return cls.from_balls(data["balls"], d=int(data["d"]), half_width=float(data["half_width"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def replica_rng(master_seed: int, replica_id: int, *extra: int) -> np.random.Generator:
    """Independent, reproducible stream for one replica."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(replica_id),) + tuple(int(e) for e in extra))
    return np.random.default_rng(ss)


def derive_seed(master_seed: int, *keys: int) -> int:
    """A 63-bit child seed, used to give each experiment arm its own family of streams."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def sample_base(window: Window, u_max: float, master_seed: int, replica_id: int) -> BaseProcess:
    """Unit-intensity Poisson process on ``window x (0, u_max]``."""
    if not u_max > 0:
        raise ValueError("u_max must be positive")
    rng = replica_rng(master_seed, replica_id)
    n = rng.poisson(window.volume * u_max)
    h = window.half_width
    centers = rng.uniform(-h, h, size=(n, window.d))
    # uniform on [0, u_max) reflected onto (0, u_max]
    marks = u_max - rng.uniform(0.0, u_max, size=n)
    return BaseProcess(_frozen(centers), _frozen(marks), float(u_max), window, int(master_seed), int(replica_id))


def apply_map(base: BaseProcess, rmap: AdmissibleMap) -> Configuration:
    """Keep ``(c, R(u))`` for every base point with ``R(u) > 0``."""
    if rmap.support_end > base.u_max:
        raise ValueError(
            f"map support {rmap.support_end} exceeds the base mark range {base.u_max}; "
            "the coupling would silently drop mass"
        )
    radii = rmap(base.marks) if len(base) else np.zeros(0)
    keep = radii > 0
    return Configuration(base.centers[keep], radii[keep], base.window)


def sample_config(nu: MeasureSpec, window: Window, master_seed: int, replica_id: int) -> Configuration:
    if nu.is_empty():
        return Configuration.empty(window.d, window.half_width)
    return apply_map(sample_base(window, nu.total_mass, master_seed, replica_id), inverse_map(nu))


def window_for_radius(s: float, nu: MeasureSpec | list[MeasureSpec], d: int = 2) -> Window:
    """Smallest centred box holding every ball that can touch the closed ball ``B(0, s)``.

    ``nu`` may be a list of coupled measures, in which case the largest radius wins.
    """
    if not s > 0:
        raise ValueError("target radius must be positive")
    measures = nu if isinstance(nu, (list, tuple)) else [nu]
    r_max = max((m.max_radius for m in measures), default=0.0)
    return Window(d, s + r_max)


def truncate_above(config: Configuration, r0: float) -> tuple[Configuration, Configuration]:
    """Split into ``(radii > r0, radii <= r0)``."""
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    above = config.radii > r0
    return config.subset(above), config.subset(~above)
