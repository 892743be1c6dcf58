"""Monte-Carlo summaries and deterministic replica fan-out."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

__all__ = ["EstimateReport", "map_replicas", "joint_stderr"]

T = TypeVar("T")

Z95 = 1.96


@dataclass(frozen=True)
class EstimateReport:
    label: str
    n_replicas: int
    mean: float
    stderr: float
    scale: float
    seed: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.mean - Z95 * self.stderr, self.mean + Z95 * self.stderr)

    @classmethod
    def from_samples(cls, label: str, samples: Sequence[float], scale: float, seed: int) -> EstimateReport:
        x = np.asarray(samples, dtype=float)
        n = len(x)
        if n == 0:
            raise ValueError("no samples")
        mean = math.fsum(x.tolist()) / n
        if n > 1:
            var = math.fsum(((x - mean) ** 2).tolist()) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        return cls(label, n, mean, se, float(scale), int(seed))

    @classmethod
    def proportion(cls, label: str, hits: int, n: int, scale: float, seed: int) -> EstimateReport:
        """Binomial proportion with the plug-in standard error."""
        if n < 1:
            raise ValueError("need at least one replica")
        p = hits / n
        return cls(label, n, p, math.sqrt(p * (1.0 - p) / n), float(scale), int(seed))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ci_lo"], out["ci_hi"] = self.ci95
        return out


def joint_stderr(*errors: float) -> float:
    """Standard error of a sum or difference of independent estimates."""
    return math.sqrt(math.fsum(e * e for e in errors))


def map_replicas(fn: Callable[[int], T], n: int, threads: int = 1) -> list[T]:
    """``[fn(0), ..., fn(n-1)]`` in replica order, optionally on a thread pool.

    Each replica draws from its own seeded stream, so the result does not
    depend on scheduling or on ``threads``.
    """
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))
