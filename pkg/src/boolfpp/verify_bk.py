"""Checks of the coloring lemma behind BK and of BK itself on Poisson count events.

Colorings are tuples ``c in {1..m}^n``.  A rule is an ``m``-tuple of pairwise
disjoint site sets ``(R_1, ..., R_m)``.  A coloring is ``(k, R)``-admissible when
every site ``i`` in ``R_a`` has color ``a`` if ``i <= k`` and color 1 otherwise.
``A_k`` collects the colorings admissible for at least one rule of the set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .sampler import derive_seed, replica_rng
from .stats import EstimateReport

__all__ = [
    "RuleSet",
    "ColoringVerdict",
    "CountEvent",
    "BKReport",
    "EnumerationTooLarge",
    "card_A",
    "check_coloring_lemma",
    "all_rules",
    "exhaustive_rule_sets",
    "random_rule_set",
    "disjoint_occurrence",
    "empirical_bk",
    "poisson_two_point_bound",
]

MAX_BITS = 20


class EnumerationTooLarge(ValueError):
    pass


Rule = tuple[frozenset, ...]


@dataclass(frozen=True)
class RuleSet:
    n: int
    m: int
    rules: frozenset[Rule]

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 2:
            raise ValueError("need n >= 1 sites and m >= 2 colors")
        rules = frozenset(tuple(frozenset(int(i) for i in part) for part in r) for r in self.rules)
        for r in rules:
            if len(r) != self.m:
                raise ValueError(f"rule {r} does not have {self.m} parts")
            seen: set[int] = set()
            for part in r:
                if not all(1 <= i <= self.n for i in part):
                    raise ValueError(f"rule {r} names a site outside 1..{self.n}")
                if seen & part:
                    raise ValueError(f"rule {r} has overlapping parts")
                seen |= part
        object.__setattr__(self, "rules", rules)

    @classmethod
    def of(cls, n: int, m: int, rules) -> RuleSet:
        return cls(n, m, frozenset(tuple(frozenset(p) for p in r) for r in rules))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "rules": sorted([sorted(p) for p in r] for r in self.rules),
        }


def _colorings(n: int, m: int) -> np.ndarray:
    if n * math.log2(m) > MAX_BITS:
        raise EnumerationTooLarge(f"{m}^{n} colorings exceed 2^{MAX_BITS}")
    grid = np.indices((m,) * n).reshape(n, -1).T
    return grid + 1


def _admissible(colorings: np.ndarray, rule: Rule, k: int) -> np.ndarray:
    ok = np.ones(len(colorings), dtype=bool)
    for a, part in enumerate(rule, start=1):
        for i in part:
            ok &= colorings[:, i - 1] == (a if i <= k else 1)
    return ok


def card_A(k: int, rules: RuleSet, colorings: np.ndarray | None = None) -> int:
    """Number of colorings that are ``(k, R)``-admissible for some rule ``R``."""
    if not 0 <= k <= rules.n:
        raise ValueError(f"k must lie in [0, {rules.n}]")
    if colorings is None:
        colorings = _colorings(rules.n, rules.m)
    hit = np.zeros(len(colorings), dtype=bool)
    for r in rules.rules:
        hit |= _admissible(colorings, r, k)
    return int(hit.sum())


@dataclass(frozen=True)
class ColoringVerdict:
    holds: bool
    chain: tuple[int, ...]
    first_drop: int | None = None

    def to_dict(self) -> dict:
        return {"holds": self.holds, "chain": list(self.chain), "first_drop": self.first_drop}


def check_coloring_lemma(rules: RuleSet) -> ColoringVerdict:
    """Whether ``card A_0 <= card A_1 <= ... <= card A_n``; reports the first ``k`` with a drop."""
    col = _colorings(rules.n, rules.m)
    chain = tuple(card_A(k, rules, col) for k in range(rules.n + 1))
    for k in range(1, len(chain)):
        if chain[k] < chain[k - 1]:
            return ColoringVerdict(False, chain, k)
    return ColoringVerdict(True, chain)


def all_rules(n: int, m: int) -> list[Rule]:
    """Every ``m``-tuple of pairwise disjoint subsets of ``{1..n}``: ``(m+1)^n`` of them."""
    out = []
    for owner in itertools.product(range(m + 1), repeat=n):
        out.append(tuple(frozenset(i + 1 for i, o in enumerate(owner) if o == a) for a in range(1, m + 1)))
    return out


def exhaustive_rule_sets(n: int, m: int, max_rules: int = 16) -> Iterator[RuleSet]:
    """Every subset of the full rule family (including the empty set)."""
    rules = all_rules(n, m)
    if len(rules) > max_rules:
        raise EnumerationTooLarge(f"2^{len(rules)} rule subsets exceed 2^{max_rules}")
    for mask in range(1 << len(rules)):
        yield RuleSet(n, m, frozenset(r for b, r in enumerate(rules) if mask >> b & 1))


def random_rule_set(n: int, m: int, rng: np.random.Generator, max_rules: int = 6) -> RuleSet:
    count = int(rng.integers(1, max_rules + 1))
    rules = set()
    for _ in range(count):
        owner = rng.integers(0, m + 1, size=n)
        rules.add(tuple(frozenset(int(i) + 1 for i in np.flatnonzero(owner == a)) for a in range(1, m + 1)))
    return RuleSet(n, m, frozenset(rules))


@dataclass(frozen=True)
class CountEvent:
    """``at least`` points of the configuration in the box ``[lo, hi]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    at_least: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(float(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(float(x) for x in self.hi))
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box corners must satisfy lo <= hi")
        if self.at_least < 1:
            raise ValueError("at_least must be >= 1")

    def inside(self, pts: np.ndarray) -> np.ndarray:
        return np.all((pts >= np.asarray(self.lo)) & (pts <= np.asarray(self.hi)), axis=1)

    def occurs(self, pts: np.ndarray) -> bool:
        return int(self.inside(pts).sum()) >= self.at_least


def disjoint_occurrence(events: Sequence[CountEvent], pts: np.ndarray) -> bool:
    """Whether disjoint sub-configurations witness every event.

    Each event asks for ``j_a`` points from its box; by Hall's theorem for
    demands this is feasible iff every group of events has, in the union of
    their boxes, at least as many points as its total demand.
    """
    member = np.array([e.inside(pts) for e in events]).reshape(len(events), -1)
    for size in range(1, len(events) + 1):
        for group in itertools.combinations(range(len(events)), size):
            have = int(member[list(group)].any(axis=0).sum())
            if have < sum(events[a].at_least for a in group):
                return False
    return True


@dataclass(frozen=True)
class BKReport:
    lhs: EstimateReport
    rhs: EstimateReport
    diff_stderr: float

    @property
    def holds(self) -> bool:
        return self.lhs.mean <= self.rhs.mean + 3.0 * self.diff_stderr

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs.mean,
            "lhs_stderr": self.lhs.stderr,
            "rhs": self.rhs.mean,
            "rhs_stderr": self.rhs.stderr,
            "diff_stderr": self.diff_stderr,
            "holds": self.holds,
        }


def _sample_box(rng: np.random.Generator, intensity: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    vol = float(np.prod(hi - lo))
    n = rng.poisson(intensity * vol) if vol > 0 else 0
    return rng.uniform(lo, hi, size=(n, len(lo)))


def empirical_bk(
    intensity: float,
    region: tuple[Sequence[float], Sequence[float]],
    events: Sequence[CountEvent],
    replicas: int,
    seed: int,
) -> BKReport:
    """Monte-Carlo disjoint occurrence in one Poisson sample against independent copies.

    Per replica, the left indicator uses one configuration and the right
    indicator asks event ``a`` of the ``a``-th independent copy (the first copy
    is the left configuration).  The inequality is judged on the paired
    difference.
    """
    if not intensity > 0:
        raise ValueError("intensity must be positive")
    if replicas < 2:
        raise ValueError("replicas must be >= 2")
    lo, hi = (np.asarray(x, dtype=float) for x in region)
    arm = derive_seed(seed, 7)
    left = np.zeros(replicas)
    right = np.zeros(replicas)
    for i in range(replicas):
        rng = replica_rng(arm, i)
        copies = [_sample_box(rng, intensity, lo, hi) for _ in events]
        left[i] = disjoint_occurrence(events, copies[0])
        right[i] = all(e.occurs(c) for e, c in zip(events, copies))
    lhs = EstimateReport.from_samples("disjoint occurrence", left, intensity, seed)
    rhs = EstimateReport.from_samples("independent copies", right, intensity, seed)
    diff = EstimateReport.from_samples("difference", left - right, intensity, seed)
    return BKReport(lhs, rhs, diff.stderr)


def poisson_two_point_bound(mu: float) -> tuple[float, float]:
    """``(P[N >= 2], P[N >= 1]^2)`` for ``N ~ Poisson(mu)``."""
    e = math.exp(-mu)
    return 1.0 - e - mu * e, (1.0 - e) ** 2
