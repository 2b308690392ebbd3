"""Exact continued-fraction arithmetic for irrational rotation numbers.

A :class:`Frequency` stores the partial quotients ``a_1, a_2, ...`` of
``alpha = [0; a_1, a_2, ...]`` in (0, 1).  Convergents use the seed

    p_{-1} = 1, q_{-1} = 0,    p_0 = 0, q_0 = 1,
    p_n = a_n p_{n-1} + p_{n-2},    q_n = a_n q_{n-1} + q_{n-2},

so ``p_1 = 1``, ``q_1 = a_1`` and ``p_{n+1} q_n - p_n q_{n+1} = (-1)**n``.
All arithmetic is on Python integers and :class:`fractions.Fraction`;
nothing here rounds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from mpmath import mp, mpf

from .errors import InsufficientPrecision, InvalidInput, ToleranceTooCoarse

__all__ = [
    "Frequency", "Convergent", "Interval", "BoundedTypeEvidence", "SandwichResult",
    "convergents", "torus_dist", "is_bounded_type", "best_approx_verify",
    "best_approx_holds", "sandwich_check", "lower_bound_holds", "DEFAULT_TOL",
]

DEFAULT_TOL = Fraction(1, 10**40)
BRUTE_FORCE_LIMIT = 10**5

# Default number of quotients materialized per rule.  Fast-growing rules are
# kept shallow because q_n has roughly sum(log2 a_k) bits.
DEFAULT_DEPTH = {
    "constant": 200,
    "arithmetic": 200,
    "periodic": 200,
    "geometric": 60,
    "explicit": 200,
    "doubly_exponential": 16,
    "liouville": 4,
}


@dataclass(frozen=True)
class Convergent:
    n: int
    p: int
    q: int

    def as_fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class Interval:
    """Closed rational interval ``[lo, hi]``."""

    lo: Fraction
    hi: Fraction

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __float__(self) -> float:
        return float(self.mid)


def _quotient_stream(rule: str, params: dict) -> Iterator[int]:
    """Yield partial quotients for a named rule (infinite generator)."""
    if rule == "constant":
        value = int(params.get("value", 1))
        while True:
            yield value
    elif rule == "arithmetic":
        start, step = int(params.get("start", 1)), int(params.get("step", 1))
        n = 0
        while True:
            yield start + step * n
            n += 1
    elif rule == "periodic":
        period = [int(a) for a in params["period"]]
        if not period:
            raise InvalidInput("periodic rule needs a non-empty period")
        while True:
            yield from period
    elif rule == "geometric":
        base = int(params.get("base", 2))
        n = 1
        while True:
            yield base**n
            n += 1
    elif rule == "doubly_exponential":
        base, growth = int(params.get("base", 2)), int(params.get("growth", 2))
        n = 1
        while True:
            yield base ** (growth**n)
            n += 1
    elif rule == "explicit":
        yield from (int(a) for a in params["quotients"])
        tail = dict(params.get("tail", {"rule": "constant", "value": 1}))
        yield from _quotient_stream(tail.pop("rule"), tail)
    else:
        raise InvalidInput(f"unknown frequency rule {rule!r}")


def _liouville_quotients(params: dict, depth: int) -> list[int]:
    # a_{n+1} = 2**ceil(scale * q_n) after an explicit prefix; the next
    # quotient depends on the current denominator, so q is tracked here.
    prefix = [int(a) for a in params.get("prefix", [1])]
    scale = Fraction(str(params.get("scale", 10)))
    out: list[int] = []
    q_prev, q_cur = 0, 1
    while len(out) < depth:
        if len(out) < len(prefix):
            a = prefix[len(out)]
        else:
            a = 1 << math.ceil(scale * q_cur)
        out.append(a)
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    return out


@dataclass(frozen=True, eq=False)
class Frequency:
    """An irrational in (0, 1) given by its partial quotients.

    Only ``precision_depth`` quotients are materialized; the rule name and
    parameters record how the infinite tail is generated.  Instances are
    immutable and cache their convergents at construction.
    """

    quotients: tuple[int, ...]
    rule: str = "explicit"
    params: tuple = ()
    _p: tuple = field(init=False, repr=False)
    _q: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not self.quotients:
            raise InvalidInput("a frequency needs at least one partial quotient")
        for a in self.quotients:
            if not isinstance(a, int) or a < 1:
                raise InvalidInput(f"partial quotients must be integers >= 1, got {a!r}")
        p, q = [0], [1]
        p_prev, q_prev = 1, 0
        for a in self.quotients:
            p_new, q_new = a * p[-1] + p_prev, a * q[-1] + q_prev
            p_prev, q_prev = p[-1], q[-1]
            p.append(p_new)
            q.append(q_new)
        object.__setattr__(self, "_p", tuple(p))
        object.__setattr__(self, "_q", tuple(q))

    @classmethod
    def from_rule(cls, rule: str, depth: int | None = None, **params) -> "Frequency":
        depth = DEFAULT_DEPTH.get(rule, 200) if depth is None else int(depth)
        if depth < 1:
            raise InvalidInput("depth must be positive")
        if rule == "liouville":
            quotients = _liouville_quotients(params, depth)
        else:
            stream = _quotient_stream(rule, dict(params))
            quotients = [next(stream) for _ in range(depth)]
        frozen = tuple(sorted((k, json.dumps(v, sort_keys=True)) for k, v in params.items()))
        return cls(tuple(quotients), rule, frozen)

    @classmethod
    def golden(cls, depth: int = 200) -> "Frequency":
        return cls.from_rule("constant", depth, value=1)

    @classmethod
    def silver(cls, depth: int = 200) -> "Frequency":
        return cls.from_rule("constant", depth, value=2)

    @classmethod
    def from_config(cls, decl: dict) -> "Frequency":
        decl = dict(decl)
        try:
            rule = decl.pop("rule")
        except KeyError:
            raise InvalidInput("frequency declaration needs a 'rule'") from None
        depth = decl.pop("depth", None)
        return cls.from_rule(rule, depth, **decl)

    def to_config(self) -> dict:
        out = {"rule": self.rule, "depth": self.precision_depth}
        out.update({k: json.loads(v) for k, v in self.params})
        if self.rule == "explicit" and not self.params:
            out["quotients"] = list(self.quotients)
        return out

    def __repr__(self) -> str:
        params = {k: json.loads(v) for k, v in self.params}
        return f"Frequency(rule={self.rule!r}, params={params!r}, depth={self.precision_depth})"

    def __eq__(self, other):
        return isinstance(other, Frequency) and self.quotients == other.quotients

    def __hash__(self):
        return hash(self.quotients)

    @property
    def precision_depth(self) -> int:
        return len(self.quotients)

    def a(self, n: int) -> int:
        """Partial quotient a_n, 1-based."""
        self._check_level(n, lowest=1)
        return self.quotients[n - 1]

    def p(self, n: int) -> int:
        self._check_level(n)
        return self._p[n]

    def q(self, n: int) -> int:
        self._check_level(n)
        return self._q[n]

    def denominators(self) -> tuple[int, ...]:
        """(q_0, q_1, ..., q_depth)."""
        return self._q

    def _check_level(self, n: int, lowest: int = 0):
        if n < lowest:
            raise InvalidInput(f"level must be >= {lowest}, got {n}")
        if n > self.precision_depth:
            raise InsufficientPrecision(
                f"level {n} requested but only {self.precision_depth} quotients materialized"
            )

    def bracket(self, n: int) -> tuple[Fraction, Fraction]:
        """Rational enclosure of alpha from consecutive convergents n, n+1."""
        self._check_level(n + 1)
        x = Fraction(self._p[n], self._q[n])
        y = Fraction(self._p[n + 1], self._q[n + 1])
        return (x, y) if x <= y else (y, x)

    def enclosure(self, k: int, tol: Fraction) -> tuple[Fraction, Fraction]:
        """Bracket ``[lo, hi]`` around alpha with ``k * (hi - lo) <= tol``.

        Uses the smallest level N with ``q_N > k`` and
        ``k / (q_N q_{N+1}) <= tol``.
        """
        q = self._q
        for n in range(0, self.precision_depth):
            if q[n] > k and k * tol.denominator <= tol.numerator * q[n] * q[n + 1]:
                return self.bracket(n)
        raise InsufficientPrecision(
            f"cannot enclose {k}*alpha to width {float(tol):.3g} with "
            f"{self.precision_depth} quotients"
        )

    def level_for_error(self, bound: Fraction) -> int:
        """Smallest level n with ``|alpha - p_n/q_n| < 1/(q_n q_{n+1}) <= bound``."""
        q = self._q
        for n in range(0, self.precision_depth):
            if bound.denominator <= bound.numerator * q[n] * q[n + 1]:
                return n
        raise InsufficientPrecision(
            f"alpha is not determined to within {float(bound):.3g} by "
            f"{self.precision_depth} quotients"
        )

    def to_mpf(self, dps: int | None = None) -> mpf:
        """High-precision value with error below 10**-dps (default: mp.dps)."""
        dps = mp.dps if dps is None else dps
        n = self.level_for_error(Fraction(1, 10 ** (dps + 2)))
        with mp.workdps(dps + 10):
            lo, hi = self.bracket(n)
            mid = (lo + hi) / 2
            return mpf(mid.numerator) / mid.denominator

    def __float__(self) -> float:
        try:
            n = self.level_for_error(Fraction(1, 2**80))
        except InsufficientPrecision:
            n = self.precision_depth - 1
        return float(Fraction(self._p[n], self._q[n]))

    def float_error_bound(self) -> float:
        """Upper bound on ``|float(self) - alpha|``."""
        try:
            n = self.level_for_error(Fraction(1, 2**80))
        except InsufficientPrecision:
            n = self.precision_depth - 1
        tail = Fraction(1, self._q[n] * self._q[n + 1])
        return float(tail) + 2.0**-53


def convergents(alpha: Frequency, depth: int) -> list[Convergent]:
    """Convergents at levels 1..depth, exact."""
    if depth < 1:
        raise InvalidInput("depth must be positive")
    if depth > alpha.precision_depth:
        raise InsufficientPrecision(
            f"depth {depth} exceeds the {alpha.precision_depth} materialized quotients"
        )
    return [Convergent(n, alpha.p(n), alpha.q(n)) for n in range(1, depth + 1)]


def _dist(t: Fraction) -> Fraction:
    r = t - math.floor(t)
    return min(r, 1 - r)


def _dist_range(a: Fraction, b: Fraction) -> Interval:
    # ||.|| is piecewise linear with minima at integers and maxima at
    # half-integers, so the range over [a, b] is fixed by the endpoints
    # plus any kink inside.
    da, db = _dist(a), _dist(b)
    lo, hi = min(da, db), max(da, db)
    if math.ceil(a) <= b:
        lo = Fraction(0)
    half = Fraction(1, 2)
    if math.ceil(a - half) <= b - half:
        hi = half
    return Interval(lo, hi)


def torus_dist(k: int, alpha, tol: Fraction = DEFAULT_TOL) -> Interval:
    """Enclosure of ``||k alpha||_T`` of width at most ``tol``.

    ``alpha`` may be any object with an ``enclosure(k, tol)`` method
    returning a rational bracket; :class:`Frequency` is the usual one.
    """
    if k < 0:
        k = -k
    tol = Fraction(tol)
    if tol <= 0:
        raise InvalidInput("tolerance must be positive")
    if k == 0:
        return Interval(Fraction(0), Fraction(0))
    lo, hi = alpha.enclosure(k, tol)
    return _dist_range(k * lo, k * hi)


@dataclass(frozen=True)
class BoundedTypeEvidence:
    """Finite-depth evidence about bounded type; never a proof."""

    bounded: bool
    max_quotient: int
    depth: int
    note: str = "finite-depth evidence"


def is_bounded_type(alpha: Frequency, depth: int) -> BoundedTypeEvidence:
    """Max quotient up to ``depth`` and a growth heuristic.

    The verdict is "bounded" when the later half of the window never exceeds
    the largest quotient seen in the earlier half.
    """
    if depth > alpha.precision_depth:
        raise InsufficientPrecision(
            f"depth {depth} exceeds the {alpha.precision_depth} materialized quotients"
        )
    window = alpha.quotients[:depth]
    half = max(1, depth // 2)
    early, late = max(window[:half]), max(window[half:], default=0)
    return BoundedTypeEvidence(late <= early, max(window), depth)


def best_approx_holds(alpha, q: int, tol: Fraction = DEFAULT_TOL) -> bool:
    """True iff ``||q alpha|| <= ||k alpha||`` for every ``1 <= k <= q-1``.

    Brute force; each comparison is decided on interval enclosures and
    raises :class:`ToleranceTooCoarse` when the enclosures overlap.
    """
    if q < 1 or q > BRUTE_FORCE_LIMIT:
        raise InvalidInput(f"q must lie in [1, {BRUTE_FORCE_LIMIT}], got {q}")
    tol = Fraction(tol)
    lo, hi = alpha.enclosure(q, tol)
    target = _dist_range(q * lo, q * hi)
    for k in range(1, q):
        other = _dist_range(k * lo, k * hi)
        if target.hi <= other.lo:
            continue
        if target.lo > other.hi:
            return False
        raise ToleranceTooCoarse(
            f"cannot order ||{q} alpha|| and ||{k} alpha|| at tolerance {float(tol):.3g}"
        )
    return True


def best_approx_verify(alpha: Frequency, n: int, tol: Fraction = DEFAULT_TOL) -> bool:
    """Best-approximation property of the level-``n`` denominator."""
    return best_approx_holds(alpha, alpha.q(n), tol)


def _decide_le(x: Interval, bound: Fraction, strict: bool = False) -> bool:
    if (x.hi < bound) or (not strict and x.hi == bound):
        return True
    if (x.lo > bound) or (strict and x.lo == bound):
        return False
    raise ToleranceTooCoarse(f"interval {float(x.lo)}..{float(x.hi)} straddles {float(bound)}")


def _decide_ge(x: Interval, bound: Fraction, strict: bool = False) -> bool:
    return _decide_le(Interval(-x.hi, -x.lo), -bound, strict)


@dataclass(frozen=True)
class SandwichResult:
    n: int
    q_n: int
    q_next: int
    dist: Interval
    upper: bool          # ||q_n alpha|| <= 2 / q_{n+1}
    literal_lower: bool  # 1 / q_{n+1} <= ||q_n alpha||
    sharp_lower: bool    # 1 / (q_n + q_{n+1}) < ||q_n alpha||
    sharp_upper: bool    # ||q_n alpha|| < 1 / q_{n+1}

    @property
    def literal(self) -> bool:
        return self.literal_lower and self.upper

    @property
    def sharp(self) -> bool:
        return self.sharp_lower and self.sharp_upper


def sandwich_check(alpha: Frequency, n: int, tol: Fraction | None = None) -> SandwichResult:
    """Decide the two-sided bounds on ``||q_n alpha||`` in exact arithmetic.

    Two forms are reported: ``1/q_{n+1} <= ||q_n alpha|| <= 2/q_{n+1}``
    (``literal``) and the sharp ``1/(q_n + q_{n+1}) < ||q_n alpha|| < 1/q_{n+1}``
    (``sharp``).  The lower half of the first form never holds for an
    irrational, since the sharp upper bound contradicts it.
    """
    if n < 1:
        raise InvalidInput("level must be >= 1")
    qn, qn1 = alpha.q(n), alpha.q(n + 1)
    if tol is None:
        tol = Fraction(1, 1000 * qn * qn1**3)
    d = torus_dist(qn, alpha, tol)
    return SandwichResult(
        n, qn, qn1, d,
        upper=_decide_le(d, Fraction(2, qn1)),
        literal_lower=_decide_ge(d, Fraction(1, qn1)),
        sharp_lower=_decide_ge(d, Fraction(1, qn + qn1), strict=True),
        sharp_upper=_decide_le(d, Fraction(1, qn1), strict=True),
    )


def lower_bound_holds(alpha: Frequency, constant: int, kmax: int,
                      tol: Fraction = DEFAULT_TOL) -> bool:
    """Check ``||k alpha|| >= 1/(constant * k)`` for ``1 <= k <= kmax``."""
    if kmax > BRUTE_FORCE_LIMIT:
        raise InvalidInput(f"kmax must be <= {BRUTE_FORCE_LIMIT}")
    lo, hi = alpha.enclosure(kmax, Fraction(tol))
    for k in range(1, kmax + 1):
        if not _decide_ge(_dist_range(k * lo, k * hi), Fraction(1, constant * k)):
            return False
    return True

