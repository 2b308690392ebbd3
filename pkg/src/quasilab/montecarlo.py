"""Seeded, chunked Monte Carlo over the unit torus.

Samples are drawn in fixed-size chunks.  Chunk ``i`` uses the ``i``-th child
of ``numpy.random.SeedSequence(seed)``, so the sample set depends only on
``(seed, samples, chunk_size)`` and never on how many worker threads are
used.  Per-chunk hit counts are integers and are summed exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .errors import InvalidInput

__all__ = ["MCParams", "MeasureEstimate", "wilson_interval", "chunk_counts", "estimate_measure"]


@dataclass(frozen=True)
class MCParams:
    samples: int = 100_000
    seed: int = 0
    chunk_size: int = 65_536
    threads: int = 1
    confidence: float = 0.95

    def __post_init__(self):
        if self.samples < 1 or self.chunk_size < 1 or self.threads < 1:
            raise InvalidInput("samples, chunk_size and threads must be positive")
        if not 0 < self.confidence < 1:
            raise InvalidInput("confidence must lie in (0, 1)")

    def with_seed(self, seed: int) -> "MCParams":
        return MCParams(self.samples, seed, self.chunk_size, self.threads, self.confidence)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise InvalidInput("need at least one trial")
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    spread = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - spread)
    high = 1.0 if successes == n else min(1.0, centre + spread)
    return low, high


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    half_width: float
    samples: int
    seed: int
    low: float
    high: float
    exact: float | None = None

    @classmethod
    def from_counts(cls, hits: int, n: int, seed: int, confidence: float = 0.95,
                    exact: float | None = None) -> "MeasureEstimate":
        low, high = wilson_interval(hits, n, confidence)
        return cls(hits / n, (high - low) / 2, n, seed, low, high, exact)

    @property
    def sigma(self) -> float:
        """Binomial standard error of ``value``."""
        p = self.value
        return math.sqrt(p * (1 - p) / self.samples)

    def contains(self, x: float) -> bool:
        return bool(self.low <= x <= self.high)


def _chunk_sizes(mc: MCParams) -> list[int]:
    full, rest = divmod(mc.samples, mc.chunk_size)
    return [mc.chunk_size] * full + ([rest] if rest else [])


def chunk_counts(fn: Callable[[np.ndarray], np.ndarray], d: int, mc: MCParams) -> np.ndarray:
    """Sum ``fn(points)`` over all chunks of uniform points in ``[0,1)^d``.

    ``fn`` maps an ``(m, d)`` array to an integer array of counts (any fixed
    shape); the per-chunk results are added in chunk order.
    """
    sizes = _chunk_sizes(mc)
    seeds = np.random.SeedSequence(mc.seed).spawn(len(sizes))

    def work(i):
        rng = np.random.default_rng(seeds[i])
        return np.asarray(fn(rng.random((sizes[i], d))), dtype=np.int64)

    if mc.threads == 1 or len(sizes) == 1:
        parts = [work(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(mc.threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    total = parts[0].copy()
    for part in parts[1:]:
        total += part
    return total


def estimate_measure(indicator: Callable[[np.ndarray], np.ndarray], d: int, mc: MCParams,
                     exact: float | None = None) -> MeasureEstimate:
    """Lebesgue measure of ``{x in T^d : indicator(x)}`` by uniform sampling."""
    hits = int(chunk_counts(lambda x: np.count_nonzero(indicator(x)), d, mc))
    return MeasureEstimate.from_counts(hits, mc.samples, mc.seed, mc.confidence, exact)
