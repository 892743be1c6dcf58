"""Finite discrete radius measures and admissible maps.

A :class:`MeasureSpec` is a finite sum of point masses on (0, inf).  An
:class:`AdmissibleMap` is a piecewise-constant map on (0, U] that pushes the
unit-intensity mark axis onto radii; it is the device used to couple Boolean
models driven by different measures on a single base process.

Step boundaries of maps are held as :class:`fractions.Fraction` so that
cumulative masses can be split back into atoms without rounding: a round trip
``pushforward(inverse_map(nu))`` reproduces every atom bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

__all__ = [
    "MeasureSpec",
    "AdmissibleMap",
    "GreedyIntegralValue",
    "survival",
    "inverse_map",
    "pushforward",
    "dominates",
    "map_min",
    "map_max",
    "map_absdiff",
    "map_le",
    "greedy_integral",
    "moment",
    "map_moment",
    "moment_bound_constant",
    "parse_measure",
]


@dataclass(frozen=True)
class MeasureSpec:
    """Finite discrete measure ``sum_i mass_i * delta_{radius_i}``.

    Atoms are stored with strictly increasing radii.  Use :meth:`from_pairs`
    to build one from unsorted or repeated radii.
    """

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        atoms = tuple((float(r), float(m)) for r, m in self.atoms)
        prev = 0.0
        for r, m in atoms:
            if not (math.isfinite(r) and r > 0):
                raise ValueError(f"atom radius must be positive and finite, got {r!r}")
            if not (math.isfinite(m) and m > 0):
                raise ValueError(f"atom mass must be positive and finite, got {m!r}")
            if r <= prev:
                raise ValueError("atom radii must be strictly increasing")
            prev = r
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> MeasureSpec:
        """Build from ``(radius, mass)`` pairs in any order; equal radii are merged."""
        merged: dict[float, Fraction] = {}
        for r, m in pairs:
            merged[float(r)] = merged.get(float(r), Fraction(0)) + Fraction(float(m))
        return cls(tuple((r, float(merged[r])) for r in sorted(merged)))

    @classmethod
    def dirac(cls, mass: float, radius: float) -> MeasureSpec:
        return cls(((radius, mass),))

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(r for r, _ in self.atoms)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(m for _, m in self.atoms)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    @property
    def max_radius(self) -> float:
        return self.atoms[-1][0] if self.atoms else 0.0

    def is_empty(self) -> bool:
        return not self.atoms

    def scaled(self, length: float = 1.0, mass: float = 1.0) -> MeasureSpec:
        """Radii multiplied by ``length`` and masses by ``mass``."""
        return MeasureSpec(tuple((r * length, m * mass) for r, m in self.atoms))

    def to_dict(self) -> dict:
        return {"atoms": [[r, m] for r, m in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict) -> MeasureSpec:
        return cls.from_pairs((float(r), float(m)) for r, m in data["atoms"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class AdmissibleMap:
    """Piecewise-constant map ``u -> R(u)`` on (0, U], zero beyond ``U``.

    ``steps`` holds ``(u_end, value)`` pairs: the map equals ``value`` on
    ``(previous u_end, u_end]``.  Values may be zero inside (0, U], which is
    needed for difference maps.
    """

    steps: tuple[tuple[Fraction, float], ...] = ()

    def __post_init__(self) -> None:
        steps = tuple((Fraction(u), float(v)) for u, v in self.steps)
        prev = Fraction(0)
        for u, v in steps:
            if u <= prev:
                raise ValueError("map breakpoints must be strictly increasing and positive")
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"map values must be finite and non-negative, got {v!r}")
            prev = u
        object.__setattr__(self, "steps", steps)

    @property
    def support_end(self) -> float:
        """U: the map vanishes on (U, inf)."""
        return float(self.steps[-1][0]) if self.steps else 0.0

    @property
    def max_value(self) -> float:
        return max((v for _, v in self.steps), default=0.0)

    def __call__(self, u):
        """Evaluate at a scalar or array of marks."""
        ends = [float(e) for e, _ in self.steps]
        vals = np.array([v for _, v in self.steps] + [0.0])
        idx = np.searchsorted(np.asarray(ends), np.asarray(u, dtype=float), side="left")
        out = vals[idx]
        if np.ndim(u) == 0:
            return float(out)
        return out

    def canonical(self) -> AdmissibleMap:
        """Merge equal neighbouring steps and drop the trailing zero run."""
        out: list[tuple[Fraction, float]] = []
        for u, v in self.steps:
            if out and out[-1][1] == v:
                out[-1] = (u, v)
            else:
                out.append((u, v))
        while out and out[-1][1] == 0.0:
            out.pop()
        return AdmissibleMap(tuple(out))

    def to_dict(self) -> dict:
        return {"steps": [[float(u), v] for u, v in self.steps]}

    @classmethod
    def from_dict(cls, data: dict) -> AdmissibleMap:
        return cls(tuple((Fraction(float(u)), float(v)) for u, v in data["steps"]))


@dataclass(frozen=True)
class GreedyIntegralValue:
    value: float
    finite: bool = True


def survival(nu: MeasureSpec, r: float) -> float:
    """``nu([r, inf))``."""
    if r <= 0:
        raise ValueError("survival is defined for r > 0")
    return math.fsum(m for rad, m in nu.atoms if rad >= r)


def inverse_map(nu: MeasureSpec) -> AdmissibleMap:
    """The canonical non-increasing representative ``R(u) = sup{r : nu([r,inf)) >= u}``."""
    steps = []
    cum = Fraction(0)
    for r, m in reversed(nu.atoms):
        cum += Fraction(m)
        steps.append((cum, r))
    return AdmissibleMap(tuple(steps))


def pushforward(rmap: AdmissibleMap) -> MeasureSpec:
    """Image of Lebesgue measure on (0, inf) under the map, restricted to positive values."""
    widths: dict[float, Fraction] = {}
    prev = Fraction(0)
    for u, v in rmap.steps:
        if v > 0:
            widths[v] = widths.get(v, Fraction(0)) + (u - prev)
        prev = u
    return MeasureSpec(tuple((v, float(widths[v])) for v in sorted(widths)))


def dominates(nu1: MeasureSpec, nu2: MeasureSpec) -> bool:
    """True iff ``nu1`` is dominated by ``nu2`` (survival functions ordered everywhere).

    Both survival functions are left-continuous steps that only change at atom
    radii, so checking the union of radii is exhaustive.
    """
    for r in sorted(set(nu1.radii) | set(nu2.radii)):
        if survival(nu1, r) > survival(nu2, r):
            return False
    return True


def _on_common_grid(m1: AdmissibleMap, m2: AdmissibleMap):
    """Yield ``(u_end, value1, value2)`` over the merged breakpoint grid."""
    grid = sorted({u for u, _ in m1.steps} | {u for u, _ in m2.steps})
    i = j = 0
    for u in grid:
        while i < len(m1.steps) and m1.steps[i][0] < u:
            i += 1
        while j < len(m2.steps) and m2.steps[j][0] < u:
            j += 1
        v1 = m1.steps[i][1] if i < len(m1.steps) else 0.0
        v2 = m2.steps[j][1] if j < len(m2.steps) else 0.0
        yield u, v1, v2


def map_min(m1: AdmissibleMap, m2: AdmissibleMap) -> AdmissibleMap:
    return AdmissibleMap(tuple((u, min(a, b)) for u, a, b in _on_common_grid(m1, m2))).canonical()


def map_max(m1: AdmissibleMap, m2: AdmissibleMap) -> AdmissibleMap:
    return AdmissibleMap(tuple((u, max(a, b)) for u, a, b in _on_common_grid(m1, m2))).canonical()


def map_absdiff(m1: AdmissibleMap, m2: AdmissibleMap) -> AdmissibleMap:
    return AdmissibleMap(tuple((u, abs(a - b)) for u, a, b in _on_common_grid(m1, m2))).canonical()


def map_le(m1: AdmissibleMap, m2: AdmissibleMap) -> bool:
    """Pointwise ``m1 <= m2``."""
    return all(a <= b for _, a, b in _on_common_grid(m1, m2))


def greedy_integral(nu: MeasureSpec, d: int) -> GreedyIntegralValue:
    """Exact ``int_0^inf nu([r, inf))^(1/d) dr`` for a discrete measure.

    On ``(r_{j-1}, r_j]`` the survival level is the mass of atoms ``>= r_j``.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    terms = []
    prev = 0.0
    masses = nu.masses
    for j, (r, _) in enumerate(nu.atoms):
        level = math.fsum(masses[j:])
        terms.append((r - prev) * level ** (1.0 / d))
        prev = r
    return GreedyIntegralValue(math.fsum(terms), True)


def moment(nu: MeasureSpec, p: float) -> float:
    """``int r^p nu(dr)``."""
    if p <= 0:
        raise ValueError("moment order must be positive")
    return math.fsum(m * r**p for r, m in nu.atoms)


def map_moment(rmap: AdmissibleMap, p: float) -> float:
    """``int R(u)^p du``."""
    if p <= 0:
        raise ValueError("moment order must be positive")
    terms = []
    prev = Fraction(0)
    for u, v in rmap.steps:
        terms.append(float(u - prev) * v**p)
        prev = u
    return math.fsum(terms)


def moment_bound_constant(d: int, lam: float, eta: float) -> float:
    """``int_0^inf min(lam, s^-(d+eta))^(1/d) ds`` in closed form.

    With this constant, ``greedy_integral(pushforward(R), d)`` is at most
    ``C * map_moment(R, d+eta)^(1/(d+eta))`` whenever the pushforward has total
    mass at most ``lam``.
    """
    if lam <= 0:
        return 0.0
    p = d + eta
    s0 = lam ** (-1.0 / p)
    return lam ** (1.0 / d) * s0 + s0 ** (1.0 - p / d) * d / eta


def parse_measure(text: str) -> MeasureSpec:
    """Parse ``"mass@radius,mass@radius,..."``; an empty string is the null measure."""
    text = text.strip()
    if not text:
        return MeasureSpec()
    pairs = []
    for item in text.split(","):
        try:
            mass, radius = item.split("@")
            pairs.append((float(radius), float(mass)))
        except ValueError as exc:
            raise ValueError(f"bad measure atom {item!r}; expected mass@radius") from exc
    return MeasureSpec.from_pairs(pairs)

