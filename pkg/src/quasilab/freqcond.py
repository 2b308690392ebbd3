"""Arithmetic conditions on frequency vectors.

All searches are finite and return either a certified witness or an
exhaustion report; the conditions themselves are asymptotic, so an
exhaustion report is evidence, not a proof of nonexistence.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .contfrac import Frequency, Interval, torus_dist
from .errors import FormulaRegimeViolated, InsufficientPrecision, InvalidInput, ToleranceTooCoarse
from .montecarlo import MCParams, MeasureEstimate, chunk_counts

__all__ = [
    "FrequencyVector", "TauCandidate", "ExhaustionReport", "InterleavePair",
    "InterleaveExhausted", "AepsResult", "SeriesResult", "condition_score",
    "generic_seq_search", "d2_interleave", "aeps_measure", "aeps_series",
]

RELATIVE_PRECISION = 10**12


def _exact(x) -> Fraction:
    # Decimal reading of floats so that 0.01 means 1/100, not its binary image.
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class FrequencyVector:
    components: tuple[Frequency, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise InvalidInput("a frequency vector needs d >= 1 components")
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def of(cls, *components: Frequency) -> "FrequencyVector":
        return cls(tuple(components))

    @classmethod
    def from_config(cls, decls: Sequence[dict]) -> "FrequencyVector":
        return cls(tuple(Frequency.from_config(dcl) for dcl in decls))

    def to_config(self) -> list[dict]:
        return [c.to_config() for c in self.components]

    @property
    def d(self) -> int:
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i) -> Frequency:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.components])

    def float_error_bound(self) -> float:
        return max(c.float_error_bound() for c in self.components)


def _relative_tol(alpha: Frequency, tau: int) -> Fraction:
    # ||tau alpha|| >= 1/(2 q_{m+1}) when q_m <= tau < q_{m+1}; make the
    # enclosure width a 1e-12 fraction of that.
    qs = alpha.denominators()
    for m in range(1, len(qs) - 1):
        if qs[m + 1] > tau:
            return Fraction(1, 2 * RELATIVE_PRECISION * qs[m + 1])
    raise InsufficientPrecision(f"tau={tau} exceeds the materialized denominators")


def condition_score(alpha: FrequencyVector, tau: Sequence[int]) -> Interval:
    """Enclosure of ``max_i (prod(tau)/tau_i) * ||tau_i alpha_i||``."""
    if len(tau) != alpha.d:
        raise InvalidInput("tau and alpha must have the same dimension")
    if any(t < 1 for t in tau):
        raise InvalidInput("all tau_i must be >= 1")
    prod = math.prod(tau)
    lo = hi = Fraction(0)
    for a, t in zip(alpha, tau):
        dist = torus_dist(t, a, _relative_tol(a, t))
        w = prod // t
        lo, hi = max(lo, w * dist.lo), max(hi, w * dist.hi)
    return Interval(lo, hi)


@dataclass(frozen=True)
class TauCandidate:
    tau: tuple[int, ...]
    score: Interval
    found: bool = True

    @property
    def score_upper(self) -> Fraction:
        return self.score.hi


@dataclass(frozen=True)
class ExhaustionReport:
    target: Fraction
    searched: int
    best: TauCandidate | None
    found: bool = False


def _candidate_taus(a: Frequency, budget: int, full_integer: bool, max_int: int | None) -> list[int]:
    if full_integer:
        return list(range(1, (max_int or a.q(min(budget, a.precision_depth - 2))) + 1))
    depth = min(budget, a.precision_depth - 2)
    if depth < 1:
        raise InsufficientPrecision("not enough quotients materialized for the search")
    return sorted({a.q(m) for m in range(1, depth + 1)})


def generic_seq_search(alpha: FrequencyVector, target, budget: int = 25,
                       full_integer: bool = False, max_int: int | None = None):
    """Find a period vector with ``max_i (prod/tau_i)||tau_i alpha_i|| < target``.

    Each ``tau_i`` ranges over the denominators ``q_1..q_budget`` of
    ``alpha_i`` (or over ``1..max_int`` with ``full_integer``).  Candidates
    are visited in lexicographic order of ``tau``, so the witness returned is
    the lexicographically smallest one.  Returns a :class:`TauCandidate`, or
    an :class:`ExhaustionReport` carrying the best score seen.
    """
    target = _exact(target)
    if target <= 0:
        raise InvalidInput("target must be positive")
    grids = [_candidate_taus(a, budget, full_integer, max_int) for a in alpha]
    dists = [{t: torus_dist(t, a, _relative_tol(a, t)) for t in grid} for a, grid in zip(alpha, grids)]
    best: TauCandidate | None = None
    searched = 0
    for tau in itertools.product(*grids):
        searched += 1
        prod = math.prod(tau)
        lo = hi = Fraction(0)
        for i, t in enumerate(tau):
            w = prod // t
            dist = dists[i][t]
            lo, hi = max(lo, w * dist.lo), max(hi, w * dist.hi)
        cand = TauCandidate(tuple(tau), Interval(lo, hi))
        if hi < target:
            return cand
        if lo < target:
            raise ToleranceTooCoarse(f"score of tau={tau} straddles the target")
        if best is None or hi < best.score.hi:
            best = cand
    return ExhaustionReport(target, searched, best)


@dataclass(frozen=True)
class InterleavePair:
    n: int
    m: int
    ratio: Fraction
    found: bool = True


@dataclass(frozen=True)
class InterleaveExhausted:
    epsilon: Fraction
    depth: int
    best_ratio: Fraction
    best_pair: tuple[int, int]
    found: bool = False


def interleave_ratio(alpha1: Frequency, alpha2: Frequency, n: int, m: int) -> Fraction:
    """``max(q2_m / q1_{n+1}, q1_n / q2_{m+1})`` as an exact fraction."""
    return max(Fraction(alpha2.q(m), alpha1.q(n + 1)), Fraction(alpha1.q(n), alpha2.q(m + 1)))


def d2_interleave(alpha1: Frequency, alpha2: Frequency, epsilon, depth: int = 25):
    """Lexicographically first ``(n, m)`` in ``1..depth`` with interleave ratio < epsilon.

    The comparison is exact integer cross-multiplication.  Either index is
    capped one below its frequency's materialized depth.
    """
    eps = _exact(epsilon)
    if eps <= 0:
        raise InvalidInput("epsilon must be positive")
    # each index stops where the next denominator is no longer materialized
    depth1 = min(depth, alpha1.precision_depth - 1)
    depth2 = min(depth, alpha2.precision_depth - 1)
    if depth1 < 1 or depth2 < 1:
        raise InsufficientPrecision("interleaving needs at least two materialized quotients")
    q1, q2 = alpha1.denominators(), alpha2.denominators()
    best, best_pair = None, (0, 0)
    for n in range(1, depth1 + 1):
        for m in range(1, depth2 + 1):
            # cross-multiplied: q2_m < eps q1_{n+1} and q1_n < eps q2_{m+1}
            if (q2[m] * eps.denominator < eps.numerator * q1[n + 1]
                    and q1[n] * eps.denominator < eps.numerator * q2[m + 1]):
                return InterleavePair(n, m, interleave_ratio(alpha1, alpha2, n, m))
            r = interleave_ratio(alpha1, alpha2, n, m)
            if best is None or r < best:
                best, best_pair = r, (n, m)
    return InterleaveExhausted(eps, depth, best, best_pair)


@dataclass(frozen=True)
class AepsResult:
    closed_form: float
    estimate: MeasureEstimate


def aeps_closed_form(m: Sequence[int], epsilon) -> Fraction:
    eps = _exact(epsilon)
    prod = math.prod(m)
    d = len(m)
    for mi in m:
        # ||m_i a_i|| < eps m_i / prod is a union of m_i arcs of total length
        # 2 eps m_i / prod as long as the radius does not exceed 1/2
        if eps * mi > Fraction(prod, 2):
            raise FormulaRegimeViolated(
                f"eps*m_i/prod(m) = {float(eps * mi / prod):.3g} > 1/2: strips wrap"
            )
    return (2 * eps) ** d / Fraction(prod) ** (d - 1)


def aeps_measure(m: Sequence[int], epsilon, mc: MCParams = MCParams()) -> AepsResult:
    """Closed form and Monte Carlo estimate of ``|A^eps_m|``."""
    m = [int(x) for x in m]
    if not m or any(x < 1 for x in m):
        raise InvalidInput("m must be a non-empty vector of positive integers")
    closed = aeps_closed_form(m, epsilon)
    mv = np.array(m, dtype=float)
    weights = math.prod(m) / mv
    eps = float(epsilon)

    def hits(x):
        dist = np.abs((mv * x + 0.5) % 1.0 - 0.5)
        return np.count_nonzero(np.max(weights * dist, axis=1) < eps)

    count = int(chunk_counts(hits, len(m), mc))
    est = MeasureEstimate.from_counts(count, mc.samples, mc.seed, mc.confidence, float(closed))
    return AepsResult(float(closed), est)


@dataclass(frozen=True)
class SeriesResult:
    partial: float
    upper_bound: float | None
    tail_bound: float | None
    divergent: bool


def aeps_series(epsilon: float, d: int, cutoff: int) -> SeriesResult:
    """Partial sum ``(2 eps)^d (sum_{m<=cutoff} m^{-(d-1)})^d``.

    For ``d >= 3`` the tail ``sum_{m>N} m^{-(d-1)}`` is bounded by
    ``N^{-(d-2)}/(d-2)`` and ``upper_bound`` encloses the full series.  For
    ``d <= 2`` the inner sum diverges and the result is flagged.
    """
    if d < 1 or cutoff < 1:
        raise InvalidInput("d and cutoff must be positive")
    m = np.arange(cutoff, 0, -1, dtype=float)  # smallest terms first
    inner = float(np.sum(m ** -(d - 1)))
    scale = (2 * epsilon) ** d
    partial = scale * inner**d
    if d <= 2:
        return SeriesResult(partial, None, None, True)
    tail = cutoff ** -(d - 2) / (d - 2)
    return SeriesResult(partial, scale * (inner + tail) ** d, tail, False)
