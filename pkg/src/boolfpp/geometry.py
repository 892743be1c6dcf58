"""Segment and ball geometry: vacant travel times, local times, skeletons.

Balls are open.  A segment that is only tangent to a ball does not meet it.
Segment intersections are worked in the segment parameter ``t in [0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import Configuration

__all__ = [
    "PolyPath",
    "ZoneDecomposition",
    "Skeleton",
    "EnhancedSkeleton",
    "GoodCheck",
    "LocalTimeBound",
    "InvalidCoupling",
    "ball_intervals",
    "union_length",
    "vacant_lengths",
    "segment_vacant_time",
    "path_time",
    "zones",
    "local_time",
    "is_good",
    "build_skeleton",
    "build_enhanced_skeleton",
    "coupled_local_time_bound",
]

MERGE_TOL = 1e-12


class InvalidCoupling(ValueError):
    """Two configurations are not a coupled pair (centers or radius order mismatch)."""


@dataclass(frozen=True, eq=False)
class PolyPath:
    """A finite sequence of distinct points of R^d."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("a path needs at least one point, given as an (n, d) array")
        if len({tuple(p) for p in pts.tolist()}) != len(pts):
            raise ValueError("path points must be pairwise distinct")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def dedup(cls, points) -> PolyPath:
        """Keep the first occurrence of each point."""
        seen: set[tuple] = set()
        keep = []
        for p in np.asarray(points, dtype=float).tolist():
            if tuple(p) not in seen:
                seen.add(tuple(p))
                keep.append(p)
        return cls(np.array(keep))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def to_dict(self) -> dict:
        return {"points": self.points.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> PolyPath:
        return cls(np.asarray(data["points"], dtype=float))


def ball_intervals(p, q, centers, radii) -> tuple[np.ndarray, np.ndarray]:
    """Open parameter intervals where the segments ``[p, q]`` meet each ball.

    ``p`` and ``q`` have shape ``(S, d)`` (or ``(d,)``), ``centers`` ``(B, d)``.
    Returns ``lo, hi`` of shape ``(S, B)`` clipped to ``[0, 1]``; a ball that
    misses the segment gives ``lo == hi == 0``.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    centers = np.asarray(centers, dtype=float).reshape(-1, p.shape[1])
    radii = np.asarray(radii, dtype=float).reshape(-1)
    v = q - p
    a = np.einsum("ij,ij->i", v, v)[:, None]
    w = p[:, None, :] - centers[None, :, :]
    wv = np.einsum("sbj,sj->sb", w, v)
    ww = np.einsum("sbj,sbj->sb", w, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        tc = -wv / a
        dist2 = ww - wv * wv / a
        half = np.sqrt((radii[None, :] ** 2 - dist2) / a)
    ok = (a > 0) & (dist2 < radii[None, :] ** 2)
    lo = np.where(ok, np.clip(tc - half, 0.0, 1.0), 0.0)
    hi = np.where(ok, np.clip(tc + half, 0.0, 1.0), 0.0)
    empty = hi <= lo
    lo[empty] = 0.0
    hi[empty] = 0.0
    return lo, hi


def union_length(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Row-wise Lebesgue measure of a union of intervals (sort-and-sweep)."""
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    if lo.shape[1] == 0:
        return np.zeros(lo.shape[0])
    order = np.argsort(lo, axis=1, kind="stable")
    lo_s = np.take_along_axis(lo, order, axis=1)
    hi_s = np.take_along_axis(hi, order, axis=1)
    reach = np.maximum.accumulate(hi_s, axis=1)
    prev = np.concatenate([np.zeros((lo.shape[0], 1)), reach[:, :-1]], axis=1)
    return np.clip(hi_s - np.maximum(lo_s, prev), 0.0, None).sum(axis=1)


def _near_balls(p, q, centers, radii) -> np.ndarray:
    """Indices of balls whose bounding box meets the bounding box of any segment."""
    if len(radii) == 0:
        return np.zeros(0, dtype=int)
    lo = np.minimum(p, q).min(axis=0)
    hi = np.maximum(p, q).max(axis=0)
    near = np.all((centers + radii[:, None] > lo) & (centers - radii[:, None] < hi), axis=1)
    return np.nonzero(near)[0]


def vacant_lengths(starts, ends, config: Configuration) -> np.ndarray:
    """``tau(x, y)`` for a batch of segments ``[starts[i], ends[i]]``."""
    p = np.atleast_2d(np.asarray(starts, dtype=float))
    q = np.atleast_2d(np.asarray(ends, dtype=float))
    seg_len = np.linalg.norm(q - p, axis=1)
    idx = _near_balls(p, q, config.centers, config.radii)
    if len(idx) == 0:
        return seg_len
    lo, hi = ball_intervals(p, q, config.centers[idx], config.radii[idx])
    covered = np.minimum(union_length(lo, hi), 1.0)
    return np.clip(seg_len * (1.0 - covered), 0.0, seg_len)


def segment_vacant_time(x, y, config: Configuration) -> float:
    """One-dimensional measure of ``[x, y]`` outside the occupied set."""
    return float(vacant_lengths(x, y, config)[0])


def _as_path(pi) -> PolyPath:
    return pi if isinstance(pi, PolyPath) else PolyPath(np.asarray(pi, dtype=float))


def path_time(pi: PolyPath, config: Configuration) -> float:
    pi = _as_path(pi)
    if len(pi) < 2:
        return 0.0
    return float(vacant_lengths(pi.points[:-1], pi.points[1:], config).sum())


@dataclass(frozen=True)
class ZoneDecomposition:
    """Per-segment zones as parameter intervals on segment ``i`` (from ``x_{i-1}`` to ``x_i``).

    ``plus[i]`` is the part of segment ``i`` inside the ball centred at its
    start point (``Z^+_{i-1}``), ``minus[i]`` the part inside the ball centred
    at its end point (``Z^-_i``).  Zones at the two path endpoints are empty.
    """

    plus: tuple[tuple[float, float], ...]
    minus: tuple[tuple[float, float], ...]
    radii: tuple[float, ...]


def zones(pi: PolyPath, config: Configuration) -> ZoneDecomposition:
    pi = _as_path(pi)
    pts = pi.points
    n = len(pts) - 1
    r = [0.0] + [config.radius_at(x) for x in pts[1:-1]] + [0.0] if n >= 1 else [0.0]
    seg = pi.segment_lengths
    plus, minus = [], []
    for i in range(n):
        L = seg[i]
        a = (min(1.0, r[i] / L) if L > 0 else 1.0) if r[i] > 0 else 0.0
        b = (min(1.0, r[i + 1] / L) if L > 0 else 1.0) if r[i + 1] > 0 else 0.0
        plus.append((0.0, a))
        minus.append((1.0 - b, 1.0) if b > 0 else (1.0, 1.0))
    return ZoneDecomposition(tuple(plus), tuple(minus), tuple(r))


def local_time(pi: PolyPath, config: Configuration) -> float:
    """Travel time at speed 1 outside the zones of ``pi``, infinite speed inside them."""
    pi = _as_path(pi)
    if len(pi) < 2:
        return 0.0
    z = zones(pi, config)
    total = []
    for L, (p0, p1), (m0, m1) in zip(pi.segment_lengths, z.plus, z.minus):
        covered = union_length(np.array([[p0, m0]]), np.array([[p1, m1]]))[0]
        total.append(L * max(0.0, 1.0 - covered))
    return math.fsum(total)


@dataclass(frozen=True)
class GoodCheck:
    good: bool
    segment: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.good


def is_good(pi: PolyPath, config: Configuration, tol: float = MERGE_TOL) -> GoodCheck:
    """Regularity plus: on every segment the occupied set is exactly the two adjacent zones.

    ``segment`` in the result is the 1-based index of the first offending segment.
    """
    pi = _as_path(pi)
    pts = pi.points
    for i, x in enumerate(pts[1:-1], start=1):
        if config.radius_at(x) <= 0:
            return GoodCheck(False, i, f"interior point {i} is not a ball center")
    if len(pts) < 2:
        return GoodCheck(True)
    z = zones(pi, config)
    lo, hi = ball_intervals(pts[:-1], pts[1:], config.centers, config.radii)
    occupied = union_length(lo, hi)
    for i in range(len(pts) - 1):
        zl = np.array([[z.plus[i][0], z.minus[i][0]]])
        zh = np.array([[z.plus[i][1], z.minus[i][1]]])
        zone_cover = union_length(zl, zh)[0]
        if occupied[i] - zone_cover > tol:
            return GoodCheck(False, i + 1, "segment meets the occupied set outside its zones")
    return GoodCheck(True)


@dataclass(frozen=True, eq=False)
class Skeleton:
    anchors: np.ndarray
    rho: float

    @property
    def k(self) -> int:
        return len(self.anchors) - 1

    @property
    def length(self) -> float:
        # every step has length rho by construction
        return self.k * self.rho


def _exit_root(w: np.ndarray, v: np.ndarray, rho: float) -> float | None:
    """Largest ``t`` with ``|w + t v| = rho`` (the outward crossing), or None."""
    a = float(v @ v)
    if a == 0.0:
        return None
    b = float(w @ v)
    c = float(w @ w) - rho * rho
    disc = b * b - a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    # stable form of (-b + sq) / a
    if b <= 0:
        return (-b + sq) / a
    return -c / (b + sq) if (b + sq) > 0 else None


def build_skeleton(pi: PolyPath, rho: float, tol: float = 1e-12) -> Skeleton:
    """Anchors at successive first crossings of spheres of radius ``rho``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    pi = _as_path(pi)
    pts = pi.points
    anchors = [pts[0].copy()]
    a = pts[0].copy()
    seg, t_cur = 0, 0.0
    nseg = len(pts) - 1
    while True:
        hit = None
        for i in range(seg, nseg):
            p, q = pts[i], pts[i + 1]
            t0 = t_cur if i == seg else 0.0
            t = _exit_root(p - a, q - p, rho)
            if t is None or t > 1.0 + tol:
                continue
            hit = (i, min(max(t, t0), 1.0))
            break
        if hit is None:
            break
        seg, t_cur = hit
        p, q = pts[seg], pts[seg + 1]
        a = p + t_cur * (q - p)
        anchors.append(a)
    return Skeleton(np.array(anchors), float(rho))


@dataclass(frozen=True, eq=False)
class EnhancedSkeleton:
    skeleton: Skeleton
    sequence: np.ndarray
    path: PolyPath
    large_weight: float
    delta: float

    @property
    def sequence_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.sequence, axis=0), axis=1).sum())

    def bounds(self) -> tuple[float, float, float]:
        """``(skeleton length, sequence length, upper bound)`` of the length sandwich."""
        lower = self.skeleton.length
        return lower, self.sequence_length, lower + 2.0 / self.delta * self.large_weight


def build_enhanced_skeleton(pi: PolyPath, rho: float, delta: float, config: Configuration) -> EnhancedSkeleton:
    """Skeleton anchors interleaved with the large balls each anchor can see.

    After anchor ``a_i`` the sequence visits, in lexicographic order of their
    coordinates, the not-yet-visited centers ``c`` with ``r(c) > delta*rho``
    and ``|c - a_i| <= r(c)/delta``.
    """
    if not (rho > 0 and delta > 0):
        raise ValueError("rho and delta must be positive")
    sk = build_skeleton(pi, rho)
    big = config.radii > delta * rho
    centers = config.centers[big]
    radii = config.radii[big]
    seq: list[np.ndarray] = []
    seen: set[tuple] = set()
    for a in sk.anchors:
        seq.append(a)
        seen.add(tuple(a.tolist()))
        if len(radii) == 0:
            continue
        dist = np.linalg.norm(centers - a, axis=1)
        hits = np.nonzero(delta * dist <= radii)[0]
        fresh = [j for j in hits if tuple(centers[j].tolist()) not in seen]
        if fresh:
            sub = centers[fresh]
            order = np.lexsort(sub.T[::-1])
            for j in order:
                c = sub[j]
                seq.append(c)
                seen.add(tuple(c.tolist()))
    sequence = np.array(seq)
    path = PolyPath.dedup(sequence)
    weight = math.fsum(r for r in (config.radius_at(x) for x in path.points) if r > delta * rho)
    return EnhancedSkeleton(sk, sequence, path, weight, float(delta))


@dataclass(frozen=True)
class LocalTimeBound:
    lhs: float
    local_plus: float
    inflation: float

    @property
    def rhs(self) -> float:
        return self.local_plus + 2.0 * self.inflation

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9 * max(1.0, abs(self.rhs))


def coupled_local_time_bound(pi: PolyPath, config_minus: Configuration, config_plus: Configuration) -> LocalTimeBound:
    """Both sides of ``local(pi; minus) <= local(pi; plus) + 2 sum_interior (r+ - r-)``.

    Every center of ``config_minus`` must be a center of ``config_plus`` with a
    radius at least as large; centers only present in ``config_plus`` count as
    radius 0 on the minus side.
    """
    for c, r in zip(config_minus.centers, config_minus.radii):
        rp = config_plus.radius_at(c)
        if rp <= 0:
            raise InvalidCoupling(f"center {c.tolist()} missing from the dominating configuration")
        if r > rp:
            raise InvalidCoupling(f"radius at {c.tolist()} decreases under the coupling ({r} > {rp})")
    pi = _as_path(pi)
    inflation = math.fsum(config_plus.radius_at(x) - config_minus.radius_at(x) for x in pi.points[1:-1])
    return LocalTimeBound(local_time(pi, config_minus), local_time(pi, config_plus), inflation)
