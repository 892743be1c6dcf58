"""Exact travel times through the Boolean model.

Travel is free inside balls and costs Euclidean length elsewhere.  The time
between two sets equals the shortest-path distance in the complete graph whose
nodes are the overlap clusters plus the two terminal sets, each edge weighted
by the Euclidean distance between its endpoints.  Geodesics are rebuilt as
polygonal paths through ball centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import PolyPath, Skeleton
from .measures import MeasureSpec
from .percolation import ComponentIndex, components
from .sampler import Configuration, Window, derive_seed, sample_config, window_for_radius
from .stats import EstimateReport, map_replicas

__all__ = [
    "TerminalSet",
    "TravelResult",
    "AnnulusResult",
    "ComponentGraph",
    "TooManyUsefulBalls",
    "set_distance",
    "travel_time",
    "radial_time",
    "annulus_time",
    "useful_balls",
    "t_square",
    "mu_square_probe",
]

KINDS = ("point", "sphere", "ball", "outside")
CHUNK = 512


@dataclass(frozen=True)
class TerminalSet:
    """A start or target set.

    ``kind`` is one of ``point`` (``center`` only), ``sphere`` ``S(center, radius)``,
    ``ball`` the closed ball, or ``outside`` the complement of the open ball.
    """

    kind: str
    center: tuple[float, ...]
    radius: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown terminal kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.kind != "point" and not self.radius > 0:
            raise ValueError(f"{self.kind} terminal needs a positive radius")

    @classmethod
    def point(cls, p) -> TerminalSet:
        return cls("point", tuple(p))

    @classmethod
    def sphere(cls, radius: float, center=(0.0, 0.0)) -> TerminalSet:
        return cls("sphere", tuple(center), radius)

    @classmethod
    def ball(cls, radius: float, center=(0.0, 0.0)) -> TerminalSet:
        return cls("ball", tuple(center), radius)

    @classmethod
    def ball_complement(cls, radius: float, center=(0.0, 0.0)) -> TerminalSet:
        return cls("outside", tuple(center), radius)

    @classmethod
    def parse(cls, text: str, d: int = 2) -> TerminalSet:
        """``point:x,y`` | ``sphere:R[@x,y]`` | ``ball:R[@x,y]`` | ``outside:R[@x,y]``."""
        try:
            kind, _, body = text.partition(":")
            kind = kind.strip()
            if kind == "point":
                p = tuple(float(v) for v in body.split(","))
                if len(p) != d:
                    raise ValueError(f"expected {d} coordinates")
                return cls.point(p)
            radius, _, where = body.partition("@")
            center = tuple(float(v) for v in where.split(",")) if where else (0.0,) * d
            if len(center) != d:
                raise ValueError(f"expected {d} coordinates")
            return cls(kind, center, float(radius))
        except ValueError as exc:
            raise ValueError(f"bad terminal {text!r}: {exc}") from exc

    @property
    def d(self) -> int:
        return len(self.center)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}

    def distance_to_balls(self, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
        """Euclidean distance from this set to each ball ``B(centers[i], radii[i])``."""
        if len(radii) == 0:
            return np.zeros(0)
        D = np.linalg.norm(np.asarray(centers) - np.asarray(self.center), axis=1)
        R = self.radius
        if self.kind == "point":
            out = D - radii
        elif self.kind == "sphere":
            out = np.maximum(R - D - radii, D - radii - R)
        elif self.kind == "ball":
            out = D - radii - R
        else:
            out = R - D - radii
        return np.maximum(out, 0.0)

    def line_intervals(self, origin: np.ndarray, u: np.ndarray) -> list[tuple[float, float]]:
        """Trace of the set on the line ``origin + t u`` (the line must pass through the center)."""
        t = float((np.asarray(self.center) - origin) @ u)
        R = self.radius
        if self.kind == "point":
            return [(t, t)]
        if self.kind == "sphere":
            return [(t - R, t - R), (t + R, t + R)]
        if self.kind == "ball":
            return [(t - R, t + R)]
        return [(-math.inf, t - R), (t + R, math.inf)]


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        e = np.zeros(len(v))
        e[0] = 1.0
        return e
    return v / n


def _closest_on_line(xs, ys) -> tuple[float, float, float]:
    """Closest pair between two unions of closed intervals: ``(gap, x, y)``."""
    best = (math.inf, 0.0, 0.0)
    for a0, a1 in xs:
        for b0, b1 in ys:
            if a1 < b0:
                cand = (b0 - a1, a1, b0)
            elif b1 < a0:
                cand = (a0 - b1, a0, b1)
            else:
                lo, hi = max(a0, b0), min(a1, b1)
                t = min(max(0.0, lo), hi)
                cand = (0.0, t, t)
            if cand[0] < best[0]:
                best = cand
    return best


def _terminal_pair(A: TerminalSet, B: TerminalSet) -> tuple[float, np.ndarray, np.ndarray]:
    """Distance between two terminal sets with a pair of points attaining it."""
    origin = np.asarray(A.center)
    u = _unit(np.asarray(B.center) - origin)
    gap, x, y = _closest_on_line(A.line_intervals(origin, u), B.line_intervals(origin, u))
    return gap, origin + x * u, origin + y * u


def _attach(term: TerminalSet, c: np.ndarray, r: float) -> np.ndarray:
    """A point of ``term`` nearest to the ball ``B(c, r)``.

    When the two meet, the point is taken inside the open ball and away from
    ``c`` so that it can end a path whose last center is ``c``.
    """
    u = _unit(np.asarray(term.center) - c)
    best = None
    for lo, hi in term.line_intervals(c, u):
        if hi < -r:
            cand = (-r - hi, hi)
        elif lo > r:
            cand = (lo - r, lo)
        else:
            t = min(max(0.5 * r, lo), hi)
            if t == 0.0 or not -r < t < r:
                t = min(max(-0.5 * r, lo), hi)
            cand = (0.0, t)
        if best is None or cand[0] < best[0]:
            best = cand
    return c + best[1] * u


def set_distance(s1, s2) -> float:
    """Euclidean distance between terminal sets and/or unions of balls (a :class:`Configuration`)."""
    if isinstance(s1, TerminalSet) and isinstance(s2, TerminalSet):
        return float(_terminal_pair(s1, s2)[0])
    if isinstance(s1, Configuration) and isinstance(s2, TerminalSet):
        s1, s2 = s2, s1
    if isinstance(s1, TerminalSet) and isinstance(s2, Configuration):
        if len(s2) == 0:
            return math.inf
        return float(s1.distance_to_balls(s2.centers, s2.radii).min())
    if isinstance(s1, Configuration) and isinstance(s2, Configuration):
        if len(s1) == 0 or len(s2) == 0:
            return math.inf
        gap = cdist(s1.centers, s2.centers) - s1.radii[:, None] - s2.radii[None, :]
        return float(max(0.0, gap.min()))
    raise TypeError(f"unsupported pair {type(s1).__name__}, {type(s2).__name__}")


def _dense_dijkstra(W: np.ndarray, src: int, dst: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dijkstra on a dense weight matrix (``inf`` = no edge, ``0`` is a valid weight)."""
    n = len(W)
    dist = np.full(n, math.inf)
    prev = np.full(n, -1)
    done = np.zeros(n, dtype=bool)
    dist[src] = 0.0
    for _ in range(n):
        masked = np.where(done, math.inf, dist)
        v = int(np.argmin(masked))
        if masked[v] == math.inf:
            break
        done[v] = True
        if v == dst:
            break
        cand = dist[v] + W[v]
        better = (cand < dist) & ~done
        dist[better] = cand[better]
        prev[better] = v
    return dist, prev


@dataclass(frozen=True, eq=False)
class TravelResult:
    time: float
    geodesic: PolyPath | None = None
    components_used: tuple[int, ...] = ()
    window_warning: bool = False

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "geodesic": None if self.geodesic is None else self.geodesic.points.tolist(),
            "components_used": list(self.components_used),
            "window_warning": self.window_warning,
        }


class ComponentGraph:
    """Cluster-level distance matrix of a configuration, reusable across queries."""

    def __init__(self, config: Configuration):
        self.config = config
        self.index: ComponentIndex = components(config)
        n = len(config)
        labels = self.index.labels
        self.order = np.argsort(labels, kind="stable")
        sorted_labels = labels[self.order]
        self.starts = np.flatnonzero(np.r_[True, sorted_labels[1:] != sorted_labels[:-1]]) if n else np.zeros(0, int)
        V = self.index.n_components
        M = np.full((V, V), math.inf)
        if n:
            c_sorted = config.centers[self.order]
            r_sorted = config.radii[self.order]
            for lo in range(0, n, CHUNK):
                rows = self.order[lo : lo + CHUNK]
                gap = cdist(config.centers[rows], c_sorted) - config.radii[rows, None] - r_sorted[None, :]
                np.maximum(gap, 0.0, out=gap)
                colmin = np.minimum.reduceat(gap, self.starts, axis=1)
                np.minimum.at(M, labels[rows], colmin)
            np.fill_diagonal(M, 0.0)
        self.M = M
        h = config.window.half_width
        self._at_boundary = (
            np.abs(config.centers).max(axis=1) + config.radii >= h if n else np.zeros(0, dtype=bool)
        )

    def _terminal_to_components(self, T: TerminalSet) -> np.ndarray:
        if len(self.config) == 0:
            return np.zeros(0)
        per_ball = T.distance_to_balls(self.config.centers, self.config.radii)
        return np.minimum.reduceat(per_ball[self.order], self.starts)

    def query(self, A: TerminalSet, B: TerminalSet, geodesic: bool = False) -> TravelResult:
        direct = _terminal_pair(A, B)
        V = self.index.n_components
        if V == 0:
            path = PolyPath.dedup([direct[1], direct[2]]) if geodesic else None
            return TravelResult(float(direct[0]), path)
        W = np.empty((V + 2, V + 2))
        W[2:, 2:] = self.M
        da = self._terminal_to_components(A)
        db = self._terminal_to_components(B)
        W[0, 2:] = W[2:, 0] = da
        W[1, 2:] = W[2:, 1] = db
        W[0, 1] = W[1, 0] = direct[0]
        W[0, 0] = W[1, 1] = 0.0
        dist, prev = _dense_dijkstra(W, 0, 1)
        nodes = []
        v = 1
        while v != -1:
            nodes.append(v)
            v = int(prev[v])
        nodes.reverse()
        used = tuple(int(u - 2) for u in nodes[1:-1])
        warn = any(bool(self._at_boundary[self.index.members[c]].any()) for c in used)
        path = self._rebuild(A, B, used, direct) if geodesic else None
        return TravelResult(float(dist[1]), path, used, warn)

    def _rebuild(self, A: TerminalSet, B: TerminalSet, used: tuple[int, ...], direct) -> PolyPath:
        if not used:
            return PolyPath.dedup([direct[1], direct[2]])
        cfg = self.config
        members = [self.index.members[c] for c in used]
        entry = [0] * len(used)
        exit_ = [0] * len(used)
        da = A.distance_to_balls(cfg.centers[members[0]], cfg.radii[members[0]])
        entry[0] = int(members[0][np.argmin(da)])
        db = B.distance_to_balls(cfg.centers[members[-1]], cfg.radii[members[-1]])
        exit_[-1] = int(members[-1][np.argmin(db)])
        for i in range(len(used) - 1):
            m1, m2 = members[i], members[i + 1]
            gap = cdist(cfg.centers[m1], cfg.centers[m2]) - cfg.radii[m1, None] - cfg.radii[None, m2]
            a, b = np.unravel_index(int(np.argmin(gap)), gap.shape)
            exit_[i], entry[i + 1] = int(m1[a]), int(m2[b])
        pts = [_attach(A, cfg.centers[entry[0]], cfg.radii[entry[0]])]
        for i, m in enumerate(members):
            pts.extend(cfg.centers[j] for j in self._chain(m, entry[i], exit_[i]))
        pts.append(_attach(B, cfg.centers[exit_[-1]], cfg.radii[exit_[-1]]))
        return PolyPath.dedup(pts)

    def _chain(self, members: np.ndarray, start: int, goal: int) -> list[int]:
        """Ball indices from ``start`` to ``goal`` along overlapping neighbours (BFS)."""
        if start == goal:
            return [start]
        cfg = self.config
        c, r = cfg.centers[members], cfg.radii[members]
        adj = cdist(c, c) < r[:, None] + r[None, :]
        pos = {int(b): i for i, b in enumerate(members)}
        parent = {pos[start]: -1}
        frontier = [pos[start]]
        while frontier and pos[goal] not in parent:
            nxt = []
            for v in frontier:
                for w in np.flatnonzero(adj[v]).tolist():
                    if w not in parent:
                        parent[w] = v
                        nxt.append(w)
            frontier = nxt
        out = []
        v = pos[goal]
        while v != -1:
            out.append(int(members[v]))
            v = parent[v]
        return out[::-1]


def travel_time(A: TerminalSet, B: TerminalSet, config: Configuration, geodesic: bool = False) -> TravelResult:
    return ComponentGraph(config).query(A, B, geodesic)


def radial_time(config: Configuration, s: float, geodesic: bool = False) -> TravelResult:
    """``T(0, S(0, s))``."""
    if not s > 0:
        raise ValueError("s must be positive")
    origin = (0.0,) * config.d
    return travel_time(TerminalSet.point(origin), TerminalSet.sphere(s, origin), config, geodesic)


@dataclass(frozen=True)
class AnnulusResult:
    time: float
    to_inner: float
    to_outer: float

    @property
    def sandwich_holds(self) -> bool:
        """``T(0,S_in) + T(S_in,S_out) <= T(0,S_out)``."""
        return self.to_inner + self.time <= self.to_outer + 1e-9 * max(1.0, self.to_outer)


def annulus_time(config: Configuration, inner: float, outer: float) -> AnnulusResult:
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")
    origin = (0.0,) * config.d
    g = ComponentGraph(config)
    zero = TerminalSet.point(origin)
    s_in, s_out = TerminalSet.sphere(inner, origin), TerminalSet.sphere(outer, origin)
    return AnnulusResult(g.query(s_in, s_out).time, g.query(zero, s_in).time, g.query(zero, s_out).time)


class TooManyUsefulBalls(ValueError):
    pass


def _ball_level_weights(points: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Dense weights over nodes ``points + balls`` (balls treated individually)."""
    p = len(points)
    W = np.empty((p + len(radii),) * 2)
    W[:p, :p] = cdist(points, points)
    pb = np.maximum(cdist(points, centers) - radii[None, :], 0.0)
    W[:p, p:] = pb
    W[p:, :p] = pb.T
    W[p:, p:] = np.maximum(cdist(centers, centers) - radii[:, None] - radii[None, :], 0.0)
    return W


def useful_balls(anchors: np.ndarray, config: Configuration) -> list[np.ndarray]:
    """Per leg, the balls through which some route beats the straight leg.

    Ball ``b`` is useful for leg ``(a, a')`` when ``T(a, b) + T(b, a') < |a - a'|``
    with times taken in the whole configuration.  A ball failing this test can
    be removed from any subset serving the leg without increasing its time.
    """
    anchors = np.asarray(anchors, dtype=float)
    k = len(anchors) - 1
    n = len(config)
    if n == 0:
        return [np.zeros(0, dtype=int) for _ in range(k)]
    W = _ball_level_weights(anchors, config.centers, config.radii)
    np.fill_diagonal(W, 0.0)
    from_anchor = [_dense_dijkstra(W, j)[0][k + 1 :] for j in range(k + 1)]
    out = []
    for j in range(1, k + 1):
        leg = float(np.linalg.norm(anchors[j] - anchors[j - 1]))
        out.append(np.flatnonzero(from_anchor[j - 1] + from_anchor[j] < leg))
    return out


def t_square(skeleton: Skeleton | Sequence, config: Configuration, cap: int = 14) -> float:
    """Least total leg time when the legs must draw on pairwise disjoint sets of balls."""
    anchors = np.asarray(skeleton.anchors if isinstance(skeleton, Skeleton) else skeleton, dtype=float)
    k = len(anchors) - 1
    if k < 1:
        return 0.0
    legs = [float(np.linalg.norm(anchors[j] - anchors[j - 1])) for j in range(1, k + 1)]
    per_leg = useful_balls(anchors, config)
    pool = sorted(set(np.concatenate(per_leg).tolist())) if per_leg else []
    if len(pool) > cap:
        raise TooManyUsefulBalls(f"{len(pool)} useful balls exceed the cap of {cap}")
    if not pool:
        return math.fsum(legs)
    centers = config.centers[pool]
    radii = config.radii[pool]
    n = len(pool)
    W_all = _ball_level_weights(anchors, centers, radii)
    leg_sets = [set(p.tolist()) for p in per_leg]
    options = [[j for j in range(k) if pool[b] in leg_sets[j]] for b in range(n)]
    cache: dict[tuple[int, int], float] = {}

    def leg_time(j: int, mask: int) -> float:
        key = (j, mask)
        if key not in cache:
            balls = [b for b in range(n) if mask >> b & 1]
            if not balls:
                cache[key] = legs[j]
            else:
                idx = [j, j + 1] + [k + 1 + b for b in balls]
                dist, _ = _dense_dijkstra(W_all[np.ix_(idx, idx)], 0, 1)
                cache[key] = float(dist[1])
        return cache[key]

    useful_mask = [sum(1 << b for b in range(n) if j in options[b]) for j in range(k)]
    best = [math.inf]
    assign = [0] * k

    def bound(i: int) -> float:
        rest = sum(1 << b for b in range(i, n))
        return math.fsum(leg_time(j, assign[j] | (useful_mask[j] & rest)) for j in range(k))

    def search(i: int) -> None:
        if bound(i) >= best[0]:
            return
        if i == n:
            best[0] = math.fsum(leg_time(j, assign[j]) for j in range(k))
            return
        for j in options[i]:
            assign[j] |= 1 << i
            search(i + 1)
            assign[j] &= ~(1 << i)
        search(i + 1)

    search(0)
    return best[0]


def mu_square_probe(
    nu: MeasureSpec,
    rho: float,
    k: int,
    replicas: int,
    seed: int,
    d: int = 2,
    cap: int = 14,
    threads: int = 1,
) -> tuple[EstimateReport, EstimateReport]:
    """``T_square / (k rho)`` on the straight skeleton ``j rho e1``, with the paired ``T(0, k rho e1)/(k rho)``.

    The first report is an upper bound for the infimum over all skeletons,
    restricted to this one skeleton.
    """
    if k < 1 or not rho > 0:
        raise ValueError("need k >= 1 and rho > 0")
    anchors = np.zeros((k + 1, d))
    anchors[:, 0] = rho * np.arange(k + 1)
    total = k * rho
    window = window_for_radius(total + rho, nu, d) if not nu.is_empty() else Window(d, total + rho)
    arm = derive_seed(seed, 2)

    def one(i: int) -> tuple[float, float]:
        cfg = sample_config(nu, window, arm, i)
        tsq = t_square(anchors, cfg, cap)
        pt = travel_time(TerminalSet.point(anchors[0]), TerminalSet.point(anchors[-1]), cfg).time
        return tsq / total, pt / total

    rows = map_replicas(one, replicas, threads)
    sq = EstimateReport.from_samples(f"t_square rho={rho} k={k}", [a for a, _ in rows], total, seed)
    pt = EstimateReport.from_samples(f"point_time k*rho={total}", [b for _, b in rows], total, seed)
    return sq, pt
