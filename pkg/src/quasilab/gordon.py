"""Executable periodic-approximation criterion for lattice potentials.

Given a potential ``V`` on ``Z^d`` and a ``tau``-periodic comparison
``V_tau``, the hypothesis checked here is

    rho < (2d - 1 + M + lambda0) ** (-(2d + gamma) * tau_1 * ... * tau_d)

where ``rho`` and ``M`` are the maxima of ``|V_tau - V|`` and ``|V|`` over
the box ``||n||_inf <= floor((2d + delta) tau_1 ... tau_d)``.  Both sides are
compared as natural logs, since the right-hand side underflows doubles for
all but the smallest periods.  Near-ties are re-decided exactly (rational
inputs) or in high precision.

A pass at one period says the hypothesis holds at that period only; the
conclusion about eigenvalues needs an infinite sequence of passing periods.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
from mpmath import mp, mpf

from .contfrac import Frequency, torus_dist
from .errors import CostGuardExceeded, InvalidInput, MissingSamples, ToleranceTooCoarse
from .freqcond import FrequencyVector
from .potential import PotentialSpec, orbit_values

__all__ = [
    "GordonInput", "GordonReport", "box_radius", "rho_and_m", "gordon_check",
    "gordon_check_orbit", "gordon_trend", "ln_abs",
]

TIE_RELATIVE = 1e-9
MAX_DPS = 20_000
VERIFIED = "hypothesis verified at this period"
NOT_MET = "hypothesis not met at this period"


def ln_abs(x) -> float:
    """Natural log of ``|x|`` for ints, Fractions, mpf and floats (-inf at 0)."""
    if x == 0:
        return -math.inf
    if isinstance(x, int):
        return math.log(abs(x))
    if isinstance(x, Fraction):
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    if isinstance(x, mpf):
        return float(mp.log(abs(x)))
    return math.log(abs(float(x)))


def box_radius(d: int, tau: Sequence[int], delta) -> int:
    """``floor((2d + delta) * prod(tau))``: the sup-norm radius of the box."""
    return math.floor((2 * d + Fraction(delta)) * math.prod(int(t) for t in tau))


def _validate(d, tau, gamma, lambda0, delta=None):
    if d < 1:
        raise InvalidInput("dimension must be >= 1")
    if len(tau) != d or any(int(t) < 1 for t in tau):
        raise InvalidInput("tau must have d components, each >= 1")
    if gamma <= 0:
        raise InvalidInput("gamma must be positive")
    if lambda0 <= 0:
        raise InvalidInput("lambda0 must be positive")
    if delta is not None and not 0 < delta < gamma:
        raise InvalidInput(f"need gamma > delta > 0, got gamma={gamma}, delta={delta}")


@dataclass(frozen=True)
class GordonInput:
    """Sampled potential and its periodic comparison on the full box.

    ``V`` and ``V_per`` have shape ``(2R+1,) * d`` and are indexed by
    ``n + R``.  Entries may be floats or mpmath numbers; ``None``/NaN marks a
    missing sample.
    """

    d: int
    tau: tuple[int, ...]
    gamma: float
    delta: float
    lambda0: float
    V: np.ndarray
    V_per: np.ndarray

    def __post_init__(self):
        _validate(self.d, self.tau, self.gamma, self.lambda0, self.delta)
        shape = (2 * self.radius + 1,) * self.d
        for name in ("V", "V_per"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise MissingSamples(f"{name} has shape {arr.shape}, the box needs {shape}")
            if arr.dtype == object:
                if any(v is None for v in arr.flat):
                    raise MissingSamples(f"{name} has unsampled sites")
            elif np.isnan(arr).any():
                raise MissingSamples(f"{name} has unsampled sites")
        for axis, t in enumerate(self.tau):
            n = shape[axis]
            if t < n:
                a = np.take(self.V_per, range(t, n), axis=axis)
                b = np.take(self.V_per, range(0, n - t), axis=axis)
                if not np.all(a == b):
                    raise InvalidInput(f"V_per is not {t}-periodic along axis {axis}")

    @property
    def radius(self) -> int:
        return box_radius(self.d, self.tau, self.delta)


def rho_and_m(inp: GordonInput):
    """``(max |V_per - V|, max |V|)`` over the box."""
    rho = max(abs(a - b) for a, b in zip(inp.V_per.flat, inp.V.flat))
    m = max(abs(v) for v in inp.V.flat)
    return rho, m


@dataclass(frozen=True)
class GordonReport:
    d: int
    tau: tuple[int, ...]
    gamma: float
    lambda0: float
    rho_log: float
    m_tau: float
    base: float
    exponent: float
    threshold_log: float
    passed: bool
    margin_log: float
    rho_mode: str = "given"
    rho_is_bound: bool = False
    delta: float | None = None
    case2_threshold_log: float | None = None

    @property
    def rho_sign(self) -> int:
        return 0 if self.rho_log == -math.inf else 1

    @property
    def verdict(self) -> str:
        return VERIFIED if self.passed else NOT_MET

    @property
    def tau_product(self) -> int:
        return math.prod(self.tau)

    @property
    def threshold_log10(self) -> float:
        return self.threshold_log / math.log(10)

    @property
    def rho_log10(self) -> float:
        return self.rho_log / math.log(10)

    @property
    def case2_passed(self) -> bool | None:
        if self.case2_threshold_log is None:
            return None
        return self.rho_log < self.case2_threshold_log

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tau"] = [str(t) if t > 2**53 else t for t in self.tau]
        out.update(rho_sign=self.rho_sign, verdict=self.verdict,
                   threshold_log10=self.threshold_log10, rho_log10=self.rho_log10,
                   case2_passed=self.case2_passed)
        return out


def _rational(x):
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float) and math.isfinite(x):
        return Fraction(x)
    return None


def _exact_pass(rho, m, d, prod, gamma, lambda0) -> bool | None:
    """Decide ``rho < base**(-E)`` exactly when every input is rational.

    With ``E = a/b`` this is ``rho**b * base**a < 1``; skipped (None) when
    the powers would be unreasonably large.
    """
    vals = [_rational(v) for v in (rho, m, gamma, lambda0)]
    if any(v is None for v in vals):
        return None
    rho_q, m_q, gamma_q, lam_q = vals
    exponent = (2 * d + gamma_q) * prod
    base = 2 * d - 1 + m_q + lam_q
    if exponent.denominator > 256 or exponent.numerator > 50_000:
        return None
    return rho_q ** exponent.denominator * base ** exponent.numerator < 1


def _mp_pass(rho, m, d, prod, gamma, lambda0) -> bool:
    with mp.workdps(60):
        base = 2 * d - 1 + mpf(m) + mpf(lambda0)
        lhs = mp.log(mpf(rho))
        rhs = -(2 * d + mpf(gamma)) * prod * mp.log(base)
        return bool(lhs < rhs)


def _report(rho_log, m, d, tau, gamma, lambda0, *, rho=None, rho_mode="given",
            rho_is_bound=False, delta=None, case2_sup=None) -> GordonReport:
    prod = math.prod(int(t) for t in tau)
    base = 2 * d - 1 + float(m) + float(lambda0)
    ln_base = math.log(base)
    scale = 2 * d + float(gamma)
    log_prod = math.log(prod)
    exponent = math.exp(math.log(scale) + log_prod) if log_prod < 700 else math.inf
    threshold_log = -math.exp(math.log(scale) + log_prod + math.log(ln_base))
    margin = threshold_log - rho_log
    passed = rho_log < threshold_log
    if rho is not None and rho_log > -math.inf and abs(margin) <= TIE_RELATIVE * max(1.0, abs(threshold_log)):
        exact = _exact_pass(rho, m, d, prod, gamma, lambda0)
        passed = exact if exact is not None else _mp_pass(rho, m, d, prod, gamma, lambda0)
    case2 = None
    if case2_sup is not None and math.isfinite(case2_sup):
        case2 = -math.exp(math.log(scale) + log_prod + math.log(math.log(4 * d - 1 + 2 * case2_sup)))
    return GordonReport(d, tuple(int(t) for t in tau), float(gamma), float(lambda0), rho_log,
                        float(m), base, exponent, threshold_log, bool(passed), margin, rho_mode,
                        rho_is_bound, None if delta is None else float(delta), case2)


def gordon_check(rho, m, d: int, tau: Sequence[int], gamma, lambda0) -> GordonReport:
    """Compare ``rho`` with the threshold in log domain.

    ``rho`` and ``m`` may be ints, Fractions, floats or mpmath numbers.
    """
    _validate(d, tau, gamma, lambda0)
    if rho < 0 or m < 0:
        raise InvalidInput("rho and m must be nonnegative")
    return _report(ln_abs(rho), m, d, tau, gamma, lambda0, rho=rho)


def _alpha_vector(alpha, d: int) -> FrequencyVector:
    if isinstance(alpha, Frequency):
        alpha = FrequencyVector.of(alpha)
    if not isinstance(alpha, FrequencyVector) or alpha.d != d:
        raise InvalidInput(f"alpha must be a FrequencyVector with {d} components")
    return alpha


def _box_sites(d: int, radius: int) -> np.ndarray:
    side = 2 * radius + 1
    return (np.indices((side,) * d).reshape(d, -1).T - radius).astype(np.int64)


def _to_mpf(v) -> mpf:
    if isinstance(v, Fraction):
        return mpf(v.numerator) / v.denominator
    return mpf(v)


def _rho_brute(f: PotentialSpec, x, alpha: FrequencyVector, tau, radius, threshold_log):
    """Box maxima by direct evaluation.  Returns (rho, m, rho_is_bound, mode)."""
    d = f.d
    sites = _box_sites(d, radius)
    tau_arr = np.asarray(tau, dtype=np.int64)
    reduced = np.mod(sites, tau_arr)
    x_float = np.array([float(v) for v in np.atleast_1d(x)])
    V = orbit_values(f, x_float, alpha, sites)
    V_per = orbit_values(f, x_float, alpha, reduced)
    m = float(np.max(np.abs(V)))
    rho = float(np.max(np.abs(V_per - V)))
    scale = max(1.0, f.declared_sup)
    if f.is_constant or rho >= 1e-6 * scale:
        return (0.0 if f.is_constant else rho), m, False, "brute-float"

    # High-precision pass.  Digits grow until rho is resolved or the
    # resolution floor itself is below the threshold (then rho <= floor passes).
    needed = max(50, math.ceil(-threshold_log / math.log(10)) + 30)
    dps = 50
    x_in = list(x) if np.ndim(x) else [x]
    while True:
        rho_mp = _rho_mp(f, x_in, alpha, sites, reduced, radius, dps)
        floor = mpf(10) ** (-(dps - 10)) * scale
        if rho_mp >= floor:
            return rho_mp, m, False, "brute-mp"
        if dps >= needed:
            return floor, m, True, "brute-mp"
        if min(2 * dps, needed) > MAX_DPS:
            raise ToleranceTooCoarse(f"deciding the criterion needs {needed} digits (> {MAX_DPS})")
        dps = min(2 * dps, needed)


def _rho_mp(f, x, alpha, sites, reduced, radius, dps) -> mpf:
    extra = len(str(radius)) + 5
    with mp.workdps(dps):
        alphas = [c.to_mpf(dps + extra) for c in alpha]
        x_mp = [_to_mpf(v) for v in x]
        cache: dict[tuple, mpf] = {}
        rho = mpf(0)
        for n, mm in zip(map(tuple, sites), map(tuple, reduced)):
            if mm not in cache:
                cache[mm] = f.eval_mp([xi + mi * ai for xi, mi, ai in zip(x_mp, mm, alphas)])
            if n == mm:
                continue
            val = f.eval_mp([xi + ni * ai for xi, ni, ai in zip(x_mp, n, alphas)])
            rho = max(rho, abs(val - cache[mm]))
        return +rho


def _log_upper_dist(alpha: Frequency, t: int) -> float:
    """Log of an upper bound on ``||t alpha||``."""
    qs = alpha.denominators()
    for n in range(1, len(qs) - 1):
        if qs[n] == t:
            return -math.log(qs[n + 1])  # ||q_n alpha|| < 1/q_{n+1}
        if qs[n] > t:
            break
    dist = torus_dist(t, alpha, Fraction(1, 10**12 * (t + 1)))
    return ln_abs(dist.hi)


def _rho_lipschitz(f: PotentialSpec, alpha: FrequencyVector, tau, radius) -> float:
    """Log of ``Lip * ||max shift||``, capped by ``2 sup|f|``.

    Sites ``n = m + j*tau`` in the box have ``|j_i| <= ceil(R / tau_i)``,
    and ``|f(y + s) - f(y)| <= Lip * ||s||_T``.
    """
    lip = f.lipschitz
    if lip is None or not f.bounded:
        raise InvalidInput("a Lipschitz rho bound needs a trig-polynomial potential")
    if lip == 0:
        return -math.inf
    terms = []
    for a, t in zip(alpha, tau):
        j_max = -(-radius // t)
        terms.append(2 * (math.log(j_max) + _log_upper_dist(a, t)))
    top = max(terms)
    log_norm = top / 2 + 0.5 * math.log(sum(math.exp(v - top) for v in terms))
    return min(math.log(lip) + log_norm, math.log(2 * f.declared_sup))


def gordon_check_orbit(f: PotentialSpec, x, alpha, tau: Sequence[int], gamma: float,
                       delta: float, lambda0: float | None = None, rho_mode: str = "auto",
                       max_sites: int = 200_000) -> GordonReport:
    """Run the criterion on ``V(n) = f(x + n*alpha)`` against its orbit periodization.

    ``rho_mode``:

    ``brute``
        evaluate every box site; double precision first, then mpmath with
        enough digits to resolve ``rho`` down to the threshold;
    ``lipschitz``
        certified upper bound ``rho <= Lip * max shift`` with ``M`` replaced
        by ``sup|f|`` (both conservative), for periods whose box is too big;
    ``auto``
        brute when the box has at most ``max_sites`` sites.

    ``lambda0`` defaults to ``2d + sup|f|`` so the window covers the whole
    spectrum of a bounded potential.
    """
    d = f.d
    tau = [int(t) for t in tau]
    if lambda0 is None:
        if not f.bounded:
            raise InvalidInput("lambda0 is required for unbounded potentials")
        lambda0 = 2 * d + f.declared_sup
    _validate(d, tau, gamma, lambda0, delta)
    alpha = _alpha_vector(alpha, d)
    radius = box_radius(d, tau, delta)
    n_sites = (2 * radius + 1) ** d
    if rho_mode == "auto":
        rho_mode = "brute" if n_sites <= max_sites else "lipschitz"
    case2_sup = f.declared_sup if f.bounded else None
    if rho_mode == "brute":
        if n_sites > max_sites:
            raise CostGuardExceeded(f"box has {n_sites} sites (limit {max_sites})")
        # threshold with the largest admissible M sets the working precision
        m_guess = f.declared_sup if f.bounded else 0.0
        pre = _report(0.0, m_guess, d, tau, gamma, lambda0)
        rho, m, is_bound, mode = _rho_brute(f, x, alpha, tau, radius, pre.threshold_log)
        return _report(ln_abs(rho), m, d, tau, gamma, lambda0, rho=None if is_bound else rho,
                       rho_mode=mode, rho_is_bound=is_bound, delta=delta, case2_sup=case2_sup)
    if rho_mode == "lipschitz":
        rho_log = _rho_lipschitz(f, alpha, tau, radius)
        return _report(rho_log, f.declared_sup, d, tau, gamma, lambda0, rho_mode="lipschitz",
                       rho_is_bound=True, delta=delta, case2_sup=case2_sup)
    raise InvalidInput(f"unknown rho_mode {rho_mode!r}")


def gordon_trend(f: PotentialSpec, x, alpha, taus: Sequence[Sequence[int]], gamma: float,
                 delta: float, lambda0: float | None = None, rho_mode: str = "auto",
                 max_sites: int = 200_000) -> list[GordonReport]:
    """One report per period vector, sorted by ``prod(tau)``."""
    reports = [gordon_check_orbit(f, x, alpha, t, gamma, delta, lambda0, rho_mode, max_sites)
               for t in taus]
    return sorted(reports, key=lambda r: (r.tau_product, r.tau))
