"""Connected components of the occupied set and annulus-crossing events."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .measures import MeasureSpec
from .sampler import Configuration, Window, derive_seed, sample_config
from .stats import EstimateReport, map_replicas

__all__ = [
    "ComponentIndex",
    "overlap_pairs",
    "components",
    "crossing_event",
    "crossing_probability",
]

ALL_PAIRS_BELOW = 64


@dataclass(frozen=True, eq=False)
class ComponentIndex:
    """Partition of the balls into overlap-connected clusters.

    Labels are ``0..n_components-1`` in order of each cluster's lowest ball index.
    """

    labels: np.ndarray
    members: tuple[np.ndarray, ...]
    min_distance: np.ndarray
    max_reach: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.members)


def _pairs_all(centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    n = len(radii)
    i, j = np.triu_indices(n, k=1)
    gap = np.linalg.norm(centers[i] - centers[j], axis=1)
    keep = gap < radii[i] + radii[j]
    return np.stack([i[keep], j[keep]], axis=1)


def _pairs_grid(centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Overlapping pairs found by hashing centers into cells of side ``2 r_max``."""
    cell = 2.0 * float(radii.max())
    keys = np.floor(centers / cell).astype(np.int64)
    buckets: dict[tuple, list[int]] = {}
    for idx, key in enumerate(map(tuple, keys.tolist())):
        buckets.setdefault(key, []).append(idx)
    d = centers.shape[1]
    offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * d, indexing="ij")).reshape(d, -1).T
    out_i, out_j = [], []
    for key, idx in buckets.items():
        mine = np.asarray(idx)
        base = np.asarray(key)
        for off in offsets:
            other = buckets.get(tuple((base + off).tolist()))
            if other is None:
                continue
            other = np.asarray(other)
            ii, jj = np.meshgrid(mine, other, indexing="ij")
            ii, jj = ii.ravel(), jj.ravel()
            sel = ii < jj
            ii, jj = ii[sel], jj[sel]
            gap = np.linalg.norm(centers[ii] - centers[jj], axis=1)
            hit = gap < radii[ii] + radii[jj]
            out_i.append(ii[hit])
            out_j.append(jj[hit])
    if not out_i:
        return np.zeros((0, 2), dtype=int)
    return np.stack([np.concatenate(out_i), np.concatenate(out_j)], axis=1)


def overlap_pairs(config: Configuration, method: str = "auto") -> np.ndarray:
    """Index pairs ``(i, j), i < j`` of balls with ``|c_i - c_j| < r_i + r_j``."""
    n = len(config)
    if n < 2:
        return np.zeros((0, 2), dtype=int)
    if method == "auto":
        method = "all" if n < ALL_PAIRS_BELOW else "grid"
    if method == "all":
        return _pairs_all(config.centers, config.radii)
    if method == "grid":
        return _pairs_grid(config.centers, config.radii)
    raise ValueError(f"unknown pair method {method!r}")


def components(config: Configuration, method: str = "auto") -> ComponentIndex:
    n = len(config)
    ds = DisjointSet(range(n))
    for i, j in overlap_pairs(config, method).tolist():
        ds.merge(i, j)
    root_label: dict[int, int] = {}
    labels = np.empty(n, dtype=int)
    for i in range(n):
        labels[i] = root_label.setdefault(ds[i], len(root_label))
    members = tuple(np.nonzero(labels == c)[0] for c in range(len(root_label)))
    norms = np.linalg.norm(config.centers, axis=1)
    inner = norms - config.radii
    outer = norms + config.radii
    min_d = np.array([inner[m].min() for m in members]) if members else np.zeros(0)
    reach = np.array([outer[m].max() for m in members]) if members else np.zeros(0)
    return ComponentIndex(labels, members, min_d, reach)


def crossing_event(config: Configuration, r: float) -> bool:
    """Whether some cluster meets ``B(0, r)`` and leaves ``B(0, 2r)``."""
    if not r > 0:
        raise ValueError("r must be positive")
    need = 2.0 * r + config.max_radius
    if config.window.half_width < need:
        raise ValueError(f"window half_width {config.window.half_width} < 2r + r_max = {need}")
    idx = components(config)
    return bool(np.any((idx.min_distance < r) & (idx.max_reach > 2.0 * r)))


def crossing_probability(
    nu: MeasureSpec,
    r: float,
    replicas: int,
    seed: int,
    d: int = 2,
    extra_balls: Configuration | None = None,
    threads: int = 1,
) -> EstimateReport:
    """Monte-Carlo ``P[a cluster crosses the annulus B(0,2r) minus B(0,r)]``.

    ``extra_balls`` are added to every replica (deterministic obstacles).
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    r_max = max(nu.max_radius, extra_balls.max_radius if extra_balls is not None else 0.0)
    window = Window(d, 2.0 * r + r_max)
    arm = derive_seed(seed, 1)

    def one(i: int) -> bool:
        cfg = sample_config(nu, window, arm, i)
        if extra_balls is not None and len(extra_balls):
            cfg = cfg.with_balls(extra_balls.centers, extra_balls.radii)
        return crossing_event(cfg, r)

    hits = sum(map_replicas(one, replicas, threads))
    return EstimateReport.proportion(f"crossing r={r}", hits, replicas, r, seed)
