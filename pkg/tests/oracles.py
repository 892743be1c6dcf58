"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math
from collections import deque
from functools import lru_cache

import numpy as np
from numba import njit

from boolfpp.sampler import Configuration
from boolfpp.travel import TerminalSet, travel_time

# --- fine-grid shortest paths ------------------------------------------------


def stencil(radius: int = 3) -> np.ndarray:
    """Primitive lattice steps with sup-norm <= radius (32 of them for radius 3)."""
    steps = [
        (dx, dy)
        for dx in range(-radius, radius + 1)
        for dy in range(-radius, radius + 1)
        if (dx, dy) != (0, 0) and math.gcd(abs(dx), abs(dy)) == 1
    ]
    return np.array(steps, dtype=np.int64)


@njit(cache=True)
def _segment_vacant(px, py, qx, qy, cx, cy, rr):
    vx = qx - px
    vy = qy - py
    a = vx * vx + vy * vy
    L = math.sqrt(a)
    if a == 0.0:
        return 0.0
    n = len(rr)
    lo = np.empty(n)
    hi = np.empty(n)
    m = 0
    for i in range(n):
        wx = px - cx[i]
        wy = py - cy[i]
        wv = wx * vx + wy * vy
        tc = -wv / a
        d2 = wx * wx + wy * wy - wv * wv / a
        r2 = rr[i] * rr[i]
        if d2 >= r2:
            continue
        half = math.sqrt((r2 - d2) / a)
        t0 = max(tc - half, 0.0)
        t1 = min(tc + half, 1.0)
        if t1 <= t0:
            continue
        # insertion sort by start
        j = m
        while j > 0 and lo[j - 1] > t0:
            lo[j] = lo[j - 1]
            hi[j] = hi[j - 1]
            j -= 1
        lo[j] = t0
        hi[j] = t1
        m += 1
    covered = 0.0
    reach = 0.0
    for i in range(m):
        s = max(lo[i], reach)
        if hi[i] > s:
            covered += hi[i] - s
        if hi[i] > reach:
            reach = hi[i]
    return L * max(0.0, 1.0 - covered)


@njit(cache=True)
def _heuristic(x, y, bx, by, cx, cy, rr, to_b):
    """Lower bound on the remaining vacant length: straight to b, or to a ball then on."""
    best = math.sqrt((x - bx) ** 2 + (y - by) ** 2)
    for i in range(len(rr)):
        gap = max(0.0, math.sqrt((x - cx[i]) ** 2 + (y - cy[i]) ** 2) - rr[i])
        if gap + to_b[i] < best:
            best = gap + to_b[i]
    return best


@njit(cache=True)
def _sift_up(heap, key, pos, i):
    node = heap[i]
    k = key[node]
    while i > 0:
        parent = (i - 1) >> 1
        pn = heap[parent]
        if key[pn] <= k:
            break
        heap[i] = pn
        pos[pn] = i
        i = parent
    heap[i] = node
    pos[node] = i


@njit(cache=True)
def _sift_down(heap, key, pos, i, size):
    node = heap[i]
    k = key[node]
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and key[heap[c + 1]] < key[heap[c]]:
            c += 1
        cn = heap[c]
        if key[cn] >= k:
            break
        heap[i] = cn
        pos[cn] = i
        i = c
    heap[i] = node
    pos[node] = i


@njit(cache=True)
def _grid_astar(nx, x0, h, ia, ja, ib, jb, cx, cy, rr, steps, to_b):
    n = nx * nx
    g = np.full(n, np.inf)
    f = np.full(n, np.inf)
    pos = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    heap = np.empty(n, dtype=np.int64)
    bx = x0 + ib * h
    by = x0 + jb * h
    src = ia * nx + ja
    dst = ib * nx + jb
    g[src] = 0.0
    f[src] = _heuristic(x0 + ia * h, x0 + ja * h, bx, by, cx, cy, rr, to_b)
    heap[0] = src
    pos[src] = 0
    size = 1
    while size > 0:
        v = heap[0]
        size -= 1
        pos[v] = -1
        if size > 0:
            heap[0] = heap[size]
            pos[heap[0]] = 0
            _sift_down(heap, f, pos, 0, size)
        if v == dst:
            return g[v]
        closed[v] = True
        vi = v // nx
        vj = v % nx
        px = x0 + vi * h
        py = x0 + vj * h
        for s in range(len(steps)):
            wi = vi + steps[s, 0]
            wj = vj + steps[s, 1]
            if wi < 0 or wj < 0 or wi >= nx or wj >= nx:
                continue
            w = wi * nx + wj
            if closed[w]:
                continue
            qx = x0 + wi * h
            qy = x0 + wj * h
            cand = g[v] + _segment_vacant(px, py, qx, qy, cx, cy, rr)
            if cand < g[w]:
                g[w] = cand
                f[w] = cand + _heuristic(qx, qy, bx, by, cx, cy, rr, to_b)
                if pos[w] < 0:
                    heap[size] = w
                    pos[w] = size
                    size += 1
                    _sift_up(heap, f, pos, size - 1)
                else:
                    _sift_up(heap, f, pos, pos[w])
    return np.inf


def ball_graph_to_target(centers: np.ndarray, radii: np.ndarray, b: np.ndarray) -> np.ndarray:
    """For each ball, the least vacant length from it to ``b`` hopping between balls (Floyd-Warshall)."""
    n = len(radii)
    W = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            W[i, j] = max(0.0, math.dist(centers[i], centers[j]) - radii[i] - radii[j])
        W[i, n] = W[n, i] = max(0.0, math.dist(centers[i], b) - radii[i])
    for m in range(n + 1):
        W = np.minimum(W, W[:, m : m + 1] + W[m : m + 1, :])
    return W[:n, n].copy()


def grid_travel_time(config: Configuration, a_idx, b_idx, h: float = 0.01, radius: int = 3) -> float:
    """Shortest vacant length over lattice paths between two lattice points of the window.

    The lattice covers ``[-hw, hw]^2`` with spacing ``h``; node ``(i, j)`` sits at
    ``(-hw + i h, -hw + j h)``.  Edge weights are exact vacant lengths, so the
    result is the time of an actual polygonal path and never undercuts the
    continuum travel time.  The search is A* guided by the ball-hopping
    distance to ``b``, which never exceeds the vacant length of any polygonal
    path and so returns the same optimum as plain Dijkstra.
    """
    hw = config.window.half_width
    nx = int(round(2 * hw / h)) + 1
    x0 = -hw
    b = np.array([x0 + b_idx[0] * h, x0 + b_idx[1] * h])
    cx = np.ascontiguousarray(config.centers[:, 0]) if len(config) else np.zeros(0)
    cy = np.ascontiguousarray(config.centers[:, 1]) if len(config) else np.zeros(0)
    to_b = ball_graph_to_target(config.centers, config.radii, b)
    return float(
        _grid_astar(nx, x0, h, int(a_idx[0]), int(a_idx[1]), int(b_idx[0]), int(b_idx[1]),
                    cx, cy, np.ascontiguousarray(config.radii), stencil(radius), to_b)
    )


@njit(cache=True)
def _polyline_times(points, offsets, cx, cy, rr):
    out = np.empty(len(offsets) - 1)
    for k in range(len(offsets) - 1):
        t = 0.0
        for i in range(offsets[k], offsets[k + 1] - 1):
            t += _segment_vacant(points[i, 0], points[i, 1], points[i + 1, 0], points[i + 1, 1], cx, cy, rr)
        out[k] = t
    return out


def polyline_times(polylines, config: Configuration) -> np.ndarray:
    """Vacant length of each polyline (a list of ``(m_k, 2)`` vertex arrays), computed independently."""
    points = np.ascontiguousarray(np.vstack(polylines), dtype=float)
    offsets = np.concatenate([[0], np.cumsum([len(p) for p in polylines])]).astype(np.int64)
    cx = np.ascontiguousarray(config.centers[:, 0]) if len(config) else np.zeros(0)
    cy = np.ascontiguousarray(config.centers[:, 1]) if len(config) else np.zeros(0)
    return _polyline_times(points, offsets, cx, cy, np.ascontiguousarray(config.radii))


# --- components ---------------------------------------------------------------


def brute_components(config: Configuration) -> list[frozenset[int]]:
    """Clusters by breadth-first search over the O(n^2) overlap relation."""
    n = len(config)
    c, r = config.centers, config.radii
    seen = [False] * n
    out = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        q = deque([s])
        comp = {s}
        while q:
            v = q.popleft()
            for w in range(n):
                if not seen[w] and math.dist(c[v], c[w]) < r[v] + r[w]:
                    seen[w] = True
                    comp.add(w)
                    q.append(w)
        out.append(frozenset(comp))
    return out


# --- disjoint-resource travel time --------------------------------------------


def t_square_enumeration(anchors, config: Configuration) -> float:
    """Minimum over every assignment of every ball to one leg or to none."""
    anchors = [tuple(map(float, a)) for a in anchors]
    k = len(anchors) - 1
    n = len(config)

    @lru_cache(maxsize=None)
    def leg(j: int, subset: frozenset) -> float:
        idx = sorted(subset)
        sub = Configuration(config.centers[idx], config.radii[idx], config.window)
        return travel_time(TerminalSet.point(anchors[j]), TerminalSet.point(anchors[j + 1]), sub).time

    best = math.inf
    for assign in itertools.product(range(k + 1), repeat=n):
        groups = [frozenset(b for b in range(n) if assign[b] == j) for j in range(k)]
        best = min(best, math.fsum(leg(j, groups[j]) for j in range(k)))
    return best


# --- greedy ratio ---------------------------------------------------------------


def greedy_enumeration(config: Configuration) -> float:
    """Best weight/length over every ordered sequence of distinct centers from the origin."""
    n = len(config)
    if n == 0:
        return 0.0
    w0 = config.radius_at(np.zeros(config.d))
    best = 0.0
    for size in range(1, n + 1):
        for perm in itertools.permutations(range(n), size):
            pts = [np.zeros(config.d)] + [config.centers[i] for i in perm]
            L = math.fsum(math.dist(p, q) for p, q in zip(pts, pts[1:]))
            W = w0 + math.fsum(config.radii[i] for i in perm)
            best = max(best, W / L)
    return best
