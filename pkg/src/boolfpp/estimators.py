"""Monte-Carlo estimates of the time constant and coupled-difference experiments."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measures import (
    AdmissibleMap,
    MeasureSpec,
    dominates,
    greedy_integral,
    inverse_map,
    map_absdiff,
    map_le,
    pushforward,
)
from .sampler import Window, apply_map, derive_seed, sample_base, sample_config, window_for_radius
from .stats import EstimateReport, joint_stderr, map_replicas
from .travel import TerminalSet, radial_time, travel_time

__all__ = [
    "MuEstimate",
    "SubadditivityCheck",
    "CoupledDifference",
    "ContinuityCurve",
    "estimate_point_time",
    "estimate_radial_time",
    "estimate_mu",
    "coupled_difference",
    "continuity_curve",
    "REPORT_COLUMNS",
    "reports_to_csv",
]

REPORT_COLUMNS = ("label", "k", "n", "mean", "stderr", "ci_lo", "ci_hi")


def _window(s: float, nu, d: int) -> Window:
    return window_for_radius(s, nu, d)


def estimate_point_time(
    nu: MeasureSpec, k: float, replicas: int, seed: int, d: int = 2, threads: int = 1
) -> EstimateReport:
    """Replicas of ``T(0, k e1) / k``."""
    if replicas < 2:
        raise ValueError("replicas must be >= 2")
    if not k > 0:
        raise ValueError("k must be positive")
    window = _window(k, nu, d)
    origin = TerminalSet.point((0.0,) * d)
    target = TerminalSet.point((float(k),) + (0.0,) * (d - 1))

    def one(i: int) -> float:
        return travel_time(origin, target, sample_config(nu, window, seed, i)).time / k

    return EstimateReport.from_samples(f"point_time k={k}", map_replicas(one, replicas, threads), k, seed)


def estimate_radial_time(
    nu: MeasureSpec, s: float, replicas: int, seed: int, d: int = 2, threads: int = 1
) -> EstimateReport:
    """Replicas of ``T(0, S(0, s)) / s``."""
    if replicas < 2:
        raise ValueError("replicas must be >= 2")
    window = _window(s, nu, d)

    def one(i: int) -> float:
        return radial_time(sample_config(nu, window, seed, i), s).time / s

    return EstimateReport.from_samples(f"radial_time s={s}", map_replicas(one, replicas, threads), s, seed)


@dataclass(frozen=True)
class SubadditivityCheck:
    j: float
    k: float
    lhs: float
    rhs: float
    stderr: float

    @property
    def holds(self) -> bool:
        """``E T(j+k) <= E T(j) + E T(k)`` within three joint standard errors."""
        return self.lhs <= self.rhs + 3.0 * self.stderr


@dataclass(frozen=True)
class MuEstimate:
    reports: tuple[EstimateReport, ...]
    subadditivity: tuple[SubadditivityCheck, ...]

    @property
    def upper_bound(self) -> float:
        """Least per-k mean; bounds the time constant from above in expectation."""
        return min(r.mean for r in self.reports)

    @property
    def extrapolated(self) -> float:
        """Heuristic point estimate: linear-in-1/k extrapolation from the last two k."""
        if len(self.reports) < 2:
            return self.reports[-1].mean
        a, b = self.reports[-2], self.reports[-1]
        return (b.scale * b.mean - a.scale * a.mean) / (b.scale - a.scale)

    def to_csv(self) -> str:
        return reports_to_csv(self.reports)


def reports_to_csv(reports: Sequence[EstimateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        lo, hi = r.ci95
        w.writerow([r.label, repr(r.scale), r.n_replicas, repr(r.mean), repr(r.stderr), repr(lo), repr(hi)])
    return buf.getvalue()


def estimate_mu(
    nu: MeasureSpec, k_grid: Sequence[float], replicas: int, seed: int, d: int = 2, threads: int = 1
) -> MuEstimate:
    """Per-k estimates of ``E T(0, k e1) / k`` on independent streams.

    Subadditivity is checked on every pair ``j <= k`` of grid values whose sum
    is also on the grid.
    """
    ks = [float(k) for k in k_grid]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_grid must be non-empty and strictly increasing")
    reports = tuple(
        estimate_point_time(nu, k, replicas, derive_seed(seed, 4, i), d, threads) for i, k in enumerate(ks)
    )
    by_k = {r.scale: r for r in reports}
    checks = []
    for a in ks:
        for b in ks:
            if b < a or (a + b) not in by_k:
                continue
            ra, rb, rs = by_k[a], by_k[b], by_k[a + b]
            if a == b:
                se = joint_stderr(rs.scale * rs.stderr, 2 * a * ra.stderr)
            else:
                se = joint_stderr(rs.scale * rs.stderr, a * ra.stderr, b * rb.stderr)
            checks.append(SubadditivityCheck(a, b, rs.scale * rs.mean, a * ra.mean + b * rb.mean, se))
    return MuEstimate(reports, tuple(checks))


def _coupling_maps(nu1: MeasureSpec, nu2: MeasureSpec, maps) -> tuple[AdmissibleMap, AdmissibleMap]:
    if maps is not None:
        m1, m2 = maps
        if not map_le(m1, m2):
            raise ValueError("explicit maps must satisfy m1 <= m2 pointwise")
        return m1, m2
    if not dominates(nu1, nu2):
        raise ValueError("nu1 is not dominated by nu2; pass explicit maps to couple them")
    return inverse_map(nu1), inverse_map(nu2)


@dataclass(frozen=True, eq=False)
class CoupledDifference:
    deltas: np.ndarray
    estimate: EstimateReport
    bound_integral: float
    violations: int
    radius_violations: int

    def to_dict(self) -> dict:
        return {
            **self.estimate.to_dict(),
            "bound_integral": self.bound_integral,
            "violations": self.violations,
            "radius_violations": self.radius_violations,
        }


def coupled_difference(
    nu1: MeasureSpec,
    nu2: MeasureSpec,
    s: float,
    replicas: int,
    seed: int,
    d: int = 2,
    maps: tuple[AdmissibleMap, AdmissibleMap] | None = None,
    threads: int = 1,
) -> CoupledDifference:
    """``T(0, S(0,s); smaller radii) - T(0, S(0,s); larger radii)`` on shared base processes.

    The difference is non-negative replica by replica; violations are counted
    rather than averaged away.
    """
    m1, m2 = _coupling_maps(nu1, nu2, maps)
    u_max = max(m1.support_end, m2.support_end)
    window = _window(s, [pushforward(m1), pushforward(m2)], d)
    arm = derive_seed(seed, 5)

    def one(i: int) -> tuple[float, int]:
        if u_max == 0:
            return 0.0, 0
        base = sample_base(window, u_max, arm, i)
        bad = int(np.count_nonzero(m1(base.marks) > m2(base.marks))) if len(base) else 0
        lo = radial_time(apply_map(base, m1), s).time
        hi = radial_time(apply_map(base, m2), s).time
        return lo - hi, bad

    rows = map_replicas(one, replicas, threads)
    deltas = np.array([r[0] for r in rows])
    est = EstimateReport.from_samples(f"coupled_delta s={s}", deltas / s, s, seed)
    integral = greedy_integral(pushforward(map_absdiff(m1, m2)), d).value
    return CoupledDifference(deltas, est, integral, int(np.count_nonzero(deltas < 0)), sum(r[1] for r in rows))


CONTINUITY_COLUMNS = ("member", "mu_hat", "stderr", "delta_mu", "bound_integral")


@dataclass(frozen=True, eq=False)
class ContinuityCurve:
    labels: tuple[str, ...]
    samples: np.ndarray  # replicas x members, T(0,S(0,s))/s
    bound_integrals: tuple[float, ...]  # adjacent pairs
    coarse_integrals: tuple[float, ...]  # pairs coarse_every apart
    s: float
    seed: int
    coarse_every: int = 2

    @property
    def mu_hat(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = len(self.samples)
        return self.samples.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(self.samples.shape[1])

    def increments(self, every: int = 1) -> np.ndarray:
        """Paired differences of ``mu_hat`` between members ``every`` apart."""
        return self.mu_hat[every::every] - self.mu_hat[:-every:every]

    def increment_stderr(self, every: int = 1) -> np.ndarray:
        diff = self.samples[:, every::every] - self.samples[:, :-every:every]
        n = len(self.samples)
        return diff.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(diff.shape[1])

    @property
    def fitted_constant(self) -> float:
        """Largest ``|delta mu| / integral`` over the coarse sub-grid."""
        deltas = np.abs(self.increments(self.coarse_every))
        ints = np.asarray(self.coarse_integrals)
        ok = ints > 0
        return float((deltas[ok] / ints[ok]).max()) if ok.any() else 0.0

    def predictive_check(self) -> np.ndarray:
        """Fine-grid increments against twice the coarse-fitted bound."""
        c = self.fitted_constant
        return np.abs(self.increments(1)) <= 2.0 * c * np.asarray(self.bound_integrals) + 1e-15

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CONTINUITY_COLUMNS)
        mu, se, inc = self.mu_hat, self.stderr, self.increments(1)
        for i, label in enumerate(self.labels):
            if i == 0:
                w.writerow([label, repr(float(mu[i])), repr(float(se[i])), "", ""])
            else:
                w.writerow([label, repr(float(mu[i])), repr(float(se[i])), repr(float(inc[i - 1])),
                            repr(self.bound_integrals[i - 1])])
        return buf.getvalue()


def _label(nu: MeasureSpec) -> str:
    return ",".join(f"{m!r}@{r!r}" for r, m in nu.atoms)


def continuity_curve(
    family: Sequence[MeasureSpec],
    s: float,
    replicas: int,
    seed: int,
    d: int = 2,
    coarse_every: int = 2,
    threads: int = 1,
) -> ContinuityCurve:
    """``T(0, S(0,s))/s`` for every member on one shared base process per replica."""
    if len(family) < 2:
        raise ValueError("need at least two family members")
    if replicas < 2:
        raise ValueError("replicas must be >= 2")
    maps = [inverse_map(nu) for nu in family]
    u_max = max(m.support_end for m in maps)
    window = _window(s, list(family), d)
    arm = derive_seed(seed, 6)

    def one(i: int) -> list[float]:
        if u_max == 0:
            return [1.0] * len(maps)
        base = sample_base(window, u_max, arm, i)
        return [radial_time(apply_map(base, m), s).time / s for m in maps]

    samples = np.array(map_replicas(one, replicas, threads))
    ints = tuple(
        greedy_integral(pushforward(map_absdiff(a, b)), d).value for a, b in zip(maps, maps[1:])
    )
    coarse = maps[::coarse_every]
    coarse_ints = tuple(
        greedy_integral(pushforward(map_absdiff(a, b)), d).value for a, b in zip(coarse, coarse[1:])
    )
    labels = tuple(_label(nu) for nu in family)
    return ContinuityCurve(labels, samples, ints, coarse_ints, float(s), int(seed), coarse_every)
