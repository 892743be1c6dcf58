"""Greedy-path functionals: the best ratio of collected radius to path length.

Paths start at the origin.  Only ball centers carry weight, so the search runs
over sequences of distinct centers; any other point only adds length.  For the
exit-constrained variant a single weightless exit point on the sphere ``|x| = s``
may be inserted anywhere along the sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import cdist

from .geometry import PolyPath
from .measures import GreedyIntegralValue, MeasureSpec, greedy_integral
from .sampler import Configuration, Window, derive_seed, sample_config
from .stats import EstimateReport, map_replicas

__all__ = [
    "GreedyResult",
    "GreedyBoundReport",
    "path_weight",
    "path_ratio",
    "exit_detour",
    "greedy_sup",
    "greedy_sup_exiting",
    "greedy_bound_check",
]

DETOUR_SAMPLES = 64


@dataclass(frozen=True, eq=False)
class GreedyResult:
    ratio: float
    witness: PolyPath
    exact: bool

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "witness": self.witness.points.tolist(), "exact": self.exact}


def path_weight(pi: PolyPath, config: Configuration) -> float:
    """Sum of the radii at every point of the path (0 at non-centers)."""
    pts = pi.points if isinstance(pi, PolyPath) else np.asarray(pi, dtype=float)
    return math.fsum(config.radius_at(x) for x in pts)


def path_ratio(pi: PolyPath, config: Configuration) -> float:
    pi = pi if isinstance(pi, PolyPath) else PolyPath(np.asarray(pi, dtype=float))
    return path_weight(pi, config) / pi.length


def _plane_basis(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair spanning a plane through 0 that contains ``p`` and ``q``."""
    d = len(p)
    e = np.eye(d)
    anchor = p if np.linalg.norm(p) > 0 else q
    if np.linalg.norm(anchor) == 0:
        return e[0], e[1]
    a = anchor / np.linalg.norm(anchor)
    for cand in (q, p, *e):
        b = cand - (cand @ a) * a
        if np.linalg.norm(b) > 1e-12 * max(1.0, np.linalg.norm(cand)):
            return a, b / np.linalg.norm(b)
    return a, e[1]


def exit_detour(p, q, s: float) -> tuple[float, np.ndarray]:
    """Cheapest extra length to go from ``p`` to ``q`` through a point of ``|z| = s``.

    Returns ``(extra, z)``.  The optimum lies in a plane through 0, ``p``, ``q``;
    the angle is located on a coarse grid and then refined.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a, b = _plane_basis(p, q)
    base = float(np.linalg.norm(p - q))

    def cost(theta):
        z = s * (np.multiply.outer(np.cos(theta), a) + np.multiply.outer(np.sin(theta), b))
        return np.linalg.norm(z - p, axis=-1) + np.linalg.norm(z - q, axis=-1)

    grid = np.linspace(0.0, 2 * math.pi, DETOUR_SAMPLES, endpoint=False)
    vals = cost(grid)
    i = int(np.argmin(vals))
    step = 2 * math.pi / DETOUR_SAMPLES
    res = minimize_scalar(lambda t: float(cost(np.array(t))), bounds=(grid[i] - step, grid[i] + step), method="bounded",
                          options={"xatol": 1e-12})
    theta = float(res.x) if res.fun < vals[i] else float(grid[i])
    z = s * (math.cos(theta) * a + math.sin(theta) * b)
    return float(cost(np.array(theta))) - base, z


class _Instance:
    """Origin plus centers, with pairwise lengths and exit costs."""

    def __init__(self, config: Configuration, s: float | None):
        d = config.d
        origin = np.zeros((1, d))
        self.pts = np.vstack([origin, config.centers])
        self.w = np.concatenate([[config.radius_at(origin[0])], config.radii])
        self.D = cdist(self.pts, self.pts)
        self.s = s
        norms = np.linalg.norm(self.pts, axis=1)
        self.norms = norms
        self.sat = norms >= s if s is not None else np.ones(len(norms), dtype=bool)
        self.end_cost = np.maximum(0.0, s - norms) if s is not None else np.zeros(len(norms))
        self._detour: dict[tuple[int, int], tuple[float, np.ndarray]] = {}

    @property
    def n(self) -> int:
        return len(self.pts) - 1

    def detour(self, i: int, j: int) -> float:
        return self.detour_point(i, j)[0]

    def detour_point(self, i: int, j: int) -> tuple[float, np.ndarray]:
        key = (i, j)
        if key not in self._detour:
            self._detour[key] = exit_detour(self.pts[i], self.pts[j], self.s)
        return self._detour[key]

    def evaluate(self, seq: list[int]) -> tuple[float, float, list]:
        """Weight, effective length and the witness point list of ``[0] + seq``."""
        full = [0] + list(seq)
        W = math.fsum(self.w[full])
        L = math.fsum(self.D[a, b] for a, b in zip(full, full[1:]))
        pts = [self.pts[i] for i in full]
        if self.s is None or self.sat[full].any():
            return W, L, pts
        last = full[-1]
        best_extra, where = self.end_cost[last], len(full)
        for pos, (a, b) in enumerate(zip(full, full[1:]), start=1):
            extra = self.detour(a, b)
            if extra < best_extra:
                best_extra, where = extra, pos
        if where == len(full):
            z = self.pts[last] * (self.s / self.norms[last]) if self.norms[last] > 0 else _axis(self.s, len(self.pts[0]))
        else:
            z = self.detour_point(full[where - 1], full[where])[1]
        pts.insert(where, z)
        return W, L + best_extra, pts


def _axis(s: float, d: int) -> np.ndarray:
    e = np.zeros(d)
    e[0] = s
    return e


def _result(inst: _Instance, seq: list[int] | None, config: Configuration, exact: bool) -> GreedyResult:
    d = config.d
    if not seq:
        pi = PolyPath(np.array([np.zeros(d), _axis(inst.s or 1.0, d)]))
        return GreedyResult(0.0, pi, exact)
    _, _, pts = inst.evaluate(seq)
    pi = PolyPath.dedup(pts)
    return GreedyResult(path_ratio(pi, config), pi, exact)


def _exact_search(inst: _Instance) -> list[int]:
    n = inst.n
    total = float(inst.w[1:].sum())
    D, w = inst.D, inst.w
    best = [0.0, []]
    seq: list[int] = []

    def dfs(last: int, W: float, L: float, md: float, sat: bool, rest: float, used: int) -> None:
        if seq:
            extra = 0.0 if sat else min(md, inst.end_cost[last])
            ratio = W / (L + extra)
            if ratio > best[0]:
                best[0], best[1] = ratio, list(seq)
            if L > 0 and (W + rest) / L <= best[0]:
                return
        for nxt in sorted(range(1, n + 1), key=lambda j: D[last, j] / w[j]):
            if used >> nxt & 1:
                continue
            step = D[last, nxt]
            nmd = md
            if inst.s is not None and not sat:
                nmd = min(md, inst.detour(last, nxt))
            seq.append(nxt)
            dfs(nxt, W + w[nxt], L + step, nmd, sat or bool(inst.sat[nxt]), rest - w[nxt], used | 1 << nxt)
            seq.pop()

    dfs(0, float(w[0]), 0.0, math.inf, bool(inst.sat[0]), total, 1)
    return best[1]


def _objective(inst: _Instance, seq: list[int]) -> float:
    W, L, _ = inst.evaluate(seq)
    return W / L


def _heuristic_search(inst: _Instance) -> list[int]:
    """Best-ratio insertion followed by 2-opt reversals."""
    n = inst.n
    if n == 0:
        return []
    D, w = inst.D, inst.w
    start = max(range(1, n + 1), key=lambda j: _objective(inst, [j]))
    seq = [start]
    unused = set(range(1, n + 1)) - {start}
    cur = _objective(inst, seq)
    while unused:
        full = [0] + seq
        cand = np.fromiter(sorted(unused), dtype=int)
        W, L, _ = inst.evaluate(seq)
        a = np.array(full[:-1])
        b = np.array(full[1:])
        mid = D[np.ix_(cand, a)] + D[np.ix_(cand, b)] - D[a, b][None, :]
        tail = D[cand, full[-1]][:, None]
        delta = np.hstack([mid, tail])
        # ranks by the current exit cost; the trial is re-scored exactly below
        ratios = (W + w[cand][:, None]) / (L + delta)
        ci, pi = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
        trial = seq[:pi] + [int(cand[ci])] + seq[pi:]
        val = _objective(inst, trial)
        if val <= cur:
            break
        seq, cur = trial, val
        unused.discard(int(cand[ci]))
    improved = True
    passes = 0
    while improved and passes < 50:
        improved = False
        passes += 1
        for i in range(len(seq) - 1):
            for j in range(i + 1, len(seq)):
                trial = seq[:i] + seq[i : j + 1][::-1] + seq[j + 1 :]
                val = _objective(inst, trial)
                if val > cur * (1 + 1e-15):
                    seq, cur, improved = trial, val, True
    return seq


def _solve(config: Configuration, s: float | None, exact_cap: int) -> GreedyResult:
    inst = _Instance(config, s)
    if inst.n == 0:
        return _result(inst, None, config, True)
    if inst.n <= exact_cap:
        return _result(inst, _exact_search(inst), config, True)
    return _result(inst, _heuristic_search(inst), config, False)


def greedy_sup(config: Configuration, exact_cap: int = 9) -> GreedyResult:
    """Best ``r(pi) / l(pi)`` over paths from the origin through distinct centers.

    Exhaustive when the configuration has at most ``exact_cap`` balls, otherwise
    a heuristic lower bound (``exact`` is False).
    """
    return _solve(config, None, exact_cap)


def greedy_sup_exiting(config: Configuration, s: float, exact_cap: int = 9) -> GreedyResult:
    """As :func:`greedy_sup`, restricted to paths with a point outside the open ball ``B(0, s)``."""
    if not s > 0:
        raise ValueError("s must be positive")
    return _solve(config, float(s), exact_cap)


@dataclass(frozen=True)
class GreedyBoundReport:
    estimate: EstimateReport
    integral: GreedyIntegralValue
    exact_fraction: float
    half_width: float

    @property
    def fitted_constant(self) -> float:
        """Empirical ratio of mean windowed G to the integral (reported, not a bound)."""
        return self.estimate.mean / self.integral.value if self.integral.value > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            **self.estimate.to_dict(),
            "integral": self.integral.value,
            "fitted_constant": self.fitted_constant,
            "exact_fraction": self.exact_fraction,
            "half_width": self.half_width,
        }


def greedy_bound_check(
    nu: MeasureSpec,
    window: Window,
    replicas: int,
    seed: int,
    exact_cap: int = 9,
    threads: int = 1,
) -> GreedyBoundReport:
    """Mean windowed G next to the integral functional of ``nu``.

    G only sees balls inside the window, so this underestimates the
    infinite-volume quantity; the bias shrinks as the window grows.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    arm = derive_seed(seed, 3)

    def one(i: int) -> tuple[float, bool]:
        res = greedy_sup(sample_config(nu, window, arm, i), exact_cap)
        return res.ratio, res.exact

    rows = map_replicas(one, replicas, threads)
    est = EstimateReport.from_samples("greedy G", [r for r, _ in rows], window.half_width, seed)
    exact = sum(e for _, e in rows) / replicas
    integral = greedy_integral(nu, window.d)
    if not math.isfinite(est.mean):
        raise ArithmeticError("windowed G is not finite")
    return GreedyBoundReport(est, integral, exact, window.half_width)
