"""Declarative potentials on the torus and Monte Carlo set-measure probes.

Families
--------
``trig_polynomial``
    ``sum_k a_k cos(2 pi k.x) + b_k sin(2 pi k.x)``; a term with ``k = 0``
    is a constant.
``indicator_box``
    ``height`` on the half-open box ``[corner, corner + sides)`` taken mod 1.
``step_sum``
    A finite sum of indicator boxes.
``inverse_power_singularity``
    ``||x - c||^(-beta)`` with ``0 < beta < 1/d`` and the Euclidean torus
    distance; evaluated values are clipped at ``ceiling`` but the family is
    flagged unbounded.

Points are reduced mod 1 into ``[0, 1)^d``.  Every Monte Carlo estimator is
a deterministic function of the :class:`~quasilab.montecarlo.MCParams`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from mpmath import mp, mpf

from .errors import (CostGuardExceeded, InvalidInput, KappaBelowResolution,
                     LevelSearchOverflow, SingularEvaluation)
from .freqcond import FrequencyVector
from .montecarlo import MCParams, MeasureEstimate, chunk_counts, estimate_measure

__all__ = [
    "TrigTerm", "Box", "PotentialSpec", "f_set_measure", "e_set_measure",
    "estimate_kappa", "m_tau_level", "periodic_approximant", "orbit_values",
    "z_tau_measure", "ZTerm", "ZTauResult", "FAMILIES",
]

FAMILIES = ("trig_polynomial", "indicator_box", "step_sum", "inverse_power_singularity")
TWO_PI = 2 * math.pi
# Thresholds whose natural log falls below this are treated as 0+.
LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class TrigTerm:
    k: tuple[int, ...]
    cos: float = 0.0
    sin: float = 0.0

    @property
    def amplitude(self) -> float:
        if not any(self.k):
            return abs(self.cos)
        return math.hypot(self.cos, self.sin)


@dataclass(frozen=True)
class Box:
    corner: tuple[float, ...]
    sides: tuple[float, ...]
    height: float = 1.0

    def __post_init__(self):
        if len(self.corner) != len(self.sides):
            raise InvalidInput("box corner and sides must have the same dimension")
        if any(not 0 < s <= 1 for s in self.sides):
            raise InvalidInput("box sides must lie in (0, 1]")

    @property
    def volume(self) -> float:
        return math.prod(self.sides)

    def contains(self, x: np.ndarray) -> np.ndarray:
        rel = np.mod(x - np.asarray(self.corner), 1.0)
        return np.all(rel < np.asarray(self.sides), axis=-1)


def _reduce(x: np.ndarray) -> np.ndarray:
    r = np.mod(x, 1.0)
    r[r >= 1.0] = 0.0  # np.mod can round tiny negatives up to exactly 1
    return r


@dataclass(frozen=True)
class PotentialSpec:
    family: str
    d: int
    terms: tuple[TrigTerm, ...] = ()
    boxes: tuple[Box, ...] = ()
    center: tuple[float, ...] | None = None
    beta: float | None = None
    ceiling: float = 1e12
    _cells: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown potential family {self.family!r}")
        if self.d < 1:
            raise InvalidInput("dimension must be >= 1")
        if self.family == "trig_polynomial":
            if not self.terms or any(len(t.k) != self.d for t in self.terms):
                raise InvalidInput("trig terms need wave vectors of length d")
        elif self.family in ("indicator_box", "step_sum"):
            if not self.boxes or any(len(b.corner) != self.d for b in self.boxes):
                raise InvalidInput("boxes must match the dimension")
            if self.family == "indicator_box" and len(self.boxes) != 1:
                raise InvalidInput("indicator_box takes exactly one box")
            object.__setattr__(self, "_cells", self._cell_decomposition())
        else:
            if self.center is None or len(self.center) != self.d:
                raise InvalidInput("singularity center must have length d")
            if self.beta is None or not 0 < self.beta < 1 / self.d:
                raise InvalidInput("exponent beta must lie in (0, 1/d)")

    # -- constructors -------------------------------------------------------
    @classmethod
    def trig_polynomial(cls, terms: Sequence[TrigTerm], d: int) -> "PotentialSpec":
        return cls("trig_polynomial", d, terms=tuple(terms))

    @classmethod
    def cosine(cls, amplitude: float = 2.0, d: int = 1, axis: int = 0) -> "PotentialSpec":
        """``amplitude * cos(2 pi x_axis)``."""
        k = tuple(1 if i == axis else 0 for i in range(d))
        return cls.trig_polynomial([TrigTerm(k, cos=amplitude)], d)

    @classmethod
    def constant(cls, value: float, d: int = 1) -> "PotentialSpec":
        return cls.trig_polynomial([TrigTerm((0,) * d, cos=value)], d)

    @classmethod
    def indicator_box(cls, corner, sides, height: float = 1.0) -> "PotentialSpec":
        box = Box(tuple(map(float, corner)), tuple(map(float, sides)), float(height))
        return cls("indicator_box", len(box.corner), boxes=(box,))

    @classmethod
    def step_sum(cls, boxes: Sequence[Box]) -> "PotentialSpec":
        return cls("step_sum", len(boxes[0].corner), boxes=tuple(boxes))

    @classmethod
    def inverse_power(cls, center, beta: float, ceiling: float = 1e12) -> "PotentialSpec":
        center = tuple(map(float, center))
        return cls("inverse_power_singularity", len(center), center=center, beta=float(beta),
                   ceiling=float(ceiling))

    @classmethod
    def from_config(cls, decl: dict) -> "PotentialSpec":
        decl = dict(decl)
        family = decl.pop("family", None)
        try:
            if family == "trig_polynomial":
                terms = [TrigTerm(tuple(t["k"]), float(t.get("cos", 0.0)), float(t.get("sin", 0.0)))
                         for t in decl.pop("terms")]
                spec = cls.trig_polynomial(terms, len(terms[0].k))
            elif family == "indicator_box":
                spec = cls.indicator_box(decl.pop("corner"), decl.pop("sides"), decl.pop("height", 1.0))
            elif family == "step_sum":
                boxes = [Box(tuple(b["corner"]), tuple(b["sides"]), float(b.get("height", 1.0)))
                         for b in decl.pop("boxes")]
                spec = cls.step_sum(boxes)
            elif family == "inverse_power_singularity":
                spec = cls.inverse_power(decl.pop("center"), decl.pop("beta"),
                                         decl.pop("ceiling", 1e12))
            else:
                raise InvalidInput(f"unknown potential family {family!r}")
        except KeyError as exc:
            raise InvalidInput(f"potential declaration is missing {exc}") from None
        if decl:
            raise InvalidInput(f"unknown potential keys: {sorted(decl)}")
        return spec

    def to_config(self) -> dict:
        if self.family == "trig_polynomial":
            return {"family": self.family,
                    "terms": [{"k": list(t.k), "cos": t.cos, "sin": t.sin} for t in self.terms]}
        if self.family in ("indicator_box", "step_sum"):
            boxes = [{"corner": list(b.corner), "sides": list(b.sides), "height": b.height}
                     for b in self.boxes]
            if self.family == "indicator_box":
                return {"family": self.family, **boxes[0]}
            return {"family": self.family, "boxes": boxes}
        return {"family": self.family, "center": list(self.center), "beta": self.beta,
                "ceiling": self.ceiling}

    # -- properties ---------------------------------------------------------
    @property
    def bounded(self) -> bool:
        return self.family != "inverse_power_singularity"

    @property
    def declared_sup(self) -> float:
        """``||f||_inf``; exact for boxes, the amplitude sum for trig polynomials."""
        if self.family == "trig_polynomial":
            return sum(t.amplitude for t in self.terms)
        if self.family in ("indicator_box", "step_sum"):
            return max(abs(v) for _, v in self._cells)
        return math.inf

    @property
    def lipschitz(self) -> float | None:
        """Lipschitz constant for the Euclidean torus metric, if known."""
        if self.family != "trig_polynomial":
            return None
        return sum(TWO_PI * t.amplitude * math.hypot(*t.k) for t in self.terms)

    @property
    def is_constant(self) -> bool:
        return self.family == "trig_polynomial" and all(
            not any(t.k) or (t.cos == 0 and t.sin == 0) for t in self.terms)

    def _cell_decomposition(self) -> tuple:
        # Grid cells between box edges; f is constant on each.
        edges = []
        for axis in range(self.d):
            cuts = {0.0}
            for b in self.boxes:
                cuts.add(b.corner[axis] % 1.0)
                cuts.add((b.corner[axis] + b.sides[axis]) % 1.0)
            cuts = sorted(cuts) + [1.0]
            edges.append([(lo, hi) for lo, hi in zip(cuts, cuts[1:]) if hi > lo])
        cells = []
        for combo in itertools.product(*edges):
            mid = np.array([[(lo + hi) / 2 for lo, hi in combo]])
            vol = math.prod(hi - lo for lo, hi in combo)
            cells.append((vol, float(self._evaluate_boxes(mid)[0])))
        return tuple(cells)

    # -- evaluation ---------------------------------------------------------
    def _evaluate_boxes(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[0])
        for b in self.boxes:
            out += np.where(b.contains(x), b.height, 0.0)
        return out

    def evaluate(self, points) -> np.ndarray:
        """Vectorized evaluation on an ``(N, d)`` array (or ``(d,)`` point)."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[-1] != self.d:
            raise InvalidInput(f"points must have {self.d} coordinates")
        x = _reduce(x)
        if self.family == "trig_polynomial":
            out = np.zeros(x.shape[0])
            for t in self.terms:
                phase = TWO_PI * (x @ np.asarray(t.k, dtype=float))
                if t.cos:
                    out += t.cos * np.cos(phase)
                if t.sin:
                    out += t.sin * np.sin(phase)
            return out
        if self.family in ("indicator_box", "step_sum"):
            return self._evaluate_boxes(x)
        delta = np.abs(x - np.asarray(self.center))
        delta = np.minimum(delta, 1.0 - delta)
        r = np.sqrt(np.sum(delta * delta, axis=1))
        with np.errstate(divide="ignore"):
            return np.minimum(r ** (-self.beta), self.ceiling)

    def eval(self, x) -> float:
        """Value at a single point; raises at the singular center."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.family == "inverse_power_singularity":
            delta = np.abs(_reduce(x[None, :])[0] - np.asarray(self.center))
            if np.all(np.minimum(delta, 1.0 - delta) == 0.0):
                raise SingularEvaluation(f"potential is singular at {tuple(x)}")
        return float(self.evaluate(x[None, :])[0])

    __call__ = eval

    def eval_mp(self, x: Sequence[mpf]) -> mpf:
        """High-precision value at the current ``mp.dps``."""
        x = [mpf(xi) - mp.floor(mpf(xi)) for xi in x]
        if self.family == "trig_polynomial":
            total = mpf(0)
            for t in self.terms:
                phase = 2 * mp.pi * mp.fsum(ki * xi for ki, xi in zip(t.k, x))
                if t.cos:
                    total += mpf(t.cos) * mp.cos(phase)
                if t.sin:
                    total += mpf(t.sin) * mp.sin(phase)
            return total
        if self.family in ("indicator_box", "step_sum"):
            total = mpf(0)
            for b in self.boxes:
                inside = True
                for xi, c, s in zip(x, b.corner, b.sides):
                    rel = xi - mpf(c)
                    rel -= mp.floor(rel)
                    inside = inside and rel < mpf(s)
                if inside:
                    total += mpf(b.height)
            return total
        sq = mpf(0)
        for xi, c in zip(x, self.center):
            dl = abs(xi - mpf(c))
            sq += min(dl, 1 - dl) ** 2
        if sq == 0:
            raise SingularEvaluation("potential is singular at its center")
        return min(mp.sqrt(sq) ** (-mpf(self.beta)), mpf(self.ceiling))

    # -- exact level sets ---------------------------------------------------
    def exact_e_measure(self, M: float) -> float | None:
        """``|{x : |f(x)| > M}|`` when a closed form is available."""
        if self.family in ("indicator_box", "step_sum"):
            return math.fsum(vol for vol, v in self._cells if abs(v) > M)
        if self.family == "trig_polynomial" and self.is_constant:
            return 1.0 if abs(self.declared_sup) > M else 0.0
        if self.family == "inverse_power_singularity":
            if M <= 0:
                return 1.0
            if M >= self.ceiling:
                return 0.0
            log_radius = -math.log(M) / self.beta
            if self.d == 1:
                return min(1.0, 2 * math.exp(min(log_radius, 0.0)))
            if log_radius > math.log(0.5):
                return None  # the ball wraps around the torus
            radius = math.exp(log_radius)
            return math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1) * radius**self.d
        return None


def _check_point(f: PotentialSpec, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (f.d,):
        raise InvalidInput(f"expected a point with {f.d} coordinates")
    return y


def f_set_measure(f: PotentialSpec, y, epsilon: float, mc: MCParams = MCParams()) -> MeasureEstimate:
    """Estimate ``|{x : |f(x+y) - f(x)| >= epsilon}|``."""
    if epsilon <= 0:
        raise InvalidInput("epsilon must be positive")
    y = _check_point(f, y)
    return estimate_measure(lambda x: np.abs(f.evaluate(x + y) - f.evaluate(x)) >= epsilon, f.d, mc)


def e_set_measure(f: PotentialSpec, M: float, mc: MCParams = MCParams()) -> MeasureEstimate:
    """Estimate ``|{x : |f(x)| > M}|``; ``exact`` is filled for closed-form families."""
    if M < 0:
        raise InvalidInput("M must be nonnegative")
    return estimate_measure(lambda x: np.abs(f.evaluate(x)) > M, f.d, mc, exact=f.exact_e_measure(M))


def _probe_shifts(d: int, r: float) -> list[np.ndarray]:
    shifts = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = r
        shifts += [e, -e]
    if d > 1:
        diag = np.full(d, r / math.sqrt(d))
        shifts += [diag, -diag]
    return shifts


def estimate_kappa(f: PotentialSpec, epsilon: float, eta: float, mc: MCParams = MCParams(),
                   r_max: float = 0.5, r_floor: float = 2.0**-30, refine: int = 16) -> float:
    """Empirical lower estimate of the continuity modulus ``kappa(epsilon, eta)``.

    A radius ``r`` is accepted when every probe shift of norm ``r`` (both
    signs of each axis and of the diagonal) has a Wilson upper bound on
    ``|F(y, epsilon)|`` below ``eta``.  The scan halves ``r`` from ``r_max``
    until a radius is accepted, then bisects ``refine`` times between it and
    the rejected radius above.  The true kappa quantifies over all shifts of
    norm < r, so this is a heuristic lower estimate, not the supremum.
    """
    if epsilon <= 0 or eta <= 0:
        raise InvalidInput("epsilon and eta must be positive")

    def accepted(r):
        return all(f_set_measure(f, y, epsilon, mc).high < eta for y in _probe_shifts(f.d, r))

    r = r_max
    while not accepted(r):
        r /= 2
        if r < r_floor:
            raise KappaBelowResolution(f"no radius >= {r_floor:g} keeps |F| below {eta:g}")
    if r == r_max:
        return r
    good, bad = r, 2 * r
    for _ in range(refine):
        mid = (good + bad) / 2
        if accepted(mid):
            good = mid
        else:
            bad = mid
    return good


def m_tau_level(f: PotentialSpec, tau: Sequence[int], mc: MCParams = MCParams(),
                rel_tol: float = 1e-3, use_exact: bool = True) -> float:
    """Smallest level ``M`` with ``|E(M)| <= (tau_1 ... tau_d)^(-d)``, from above.

    Bisection on ``M``; every probe reuses the same sample set so the Monte
    Carlo estimate is monotone in ``M``.  Closed-form level sets are used
    when available and ``use_exact`` is set.  Returns the upper end of the
    final bracket.
    """
    if len(tau) != f.d or any(int(t) < 1 for t in tau):
        raise InvalidInput("tau must have d components, each >= 1")
    target = float(math.prod(int(t) for t in tau)) ** (-f.d)

    def measure(M):
        if use_exact:
            exact = f.exact_e_measure(M)
            if exact is not None:
                return exact
        return e_set_measure(f, M, mc).value

    if measure(0.0) <= target:
        return 0.0
    if f.bounded:
        hi = f.declared_sup
    else:
        hi = 1.0
        while measure(hi) > target:
            hi *= 2
            if hi > f.ceiling:
                raise LevelSearchOverflow(
                    f"level search passed the evaluation ceiling {f.ceiling:g}", f.ceiling)
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = (lo + hi) / 2
        if measure(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def _alpha_floats(alpha, d: int) -> np.ndarray:
    if isinstance(alpha, FrequencyVector):
        vals = alpha.floats()
    else:
        vals = np.asarray(alpha, dtype=float).reshape(-1)
    if vals.shape != (d,):
        raise InvalidInput(f"alpha must have {d} components")
    return vals


def orbit_points(x, alpha, sites: np.ndarray, d: int) -> np.ndarray:
    """``x + n * alpha`` (componentwise) for integer sites of shape ``(N, d)``."""
    a = _alpha_floats(alpha, d)
    x = np.asarray(x, dtype=float).reshape(d)
    # reduce n*alpha first: keeps the sum small before adding the phase
    return _reduce(_reduce(sites * a) + x)


def orbit_values(f: PotentialSpec, x, alpha, sites: np.ndarray) -> np.ndarray:
    """``f(x + n * alpha)`` at each site."""
    return f.evaluate(orbit_points(x, alpha, np.asarray(sites), f.d))


def periodic_approximant(f: PotentialSpec, x, alpha, tau: Sequence[int], n) -> float | np.ndarray:
    """Orbit periodization: ``f(x + m * alpha)`` with ``m_j = n_j mod tau_j``.

    ``n`` may be a single site (length d) or an ``(N, d)`` array of sites.
    """
    tau = np.asarray(tau, dtype=np.int64)
    if tau.shape != (f.d,) or np.any(tau < 1):
        raise InvalidInput("tau must have d components, each >= 1")
    sites = np.asarray(n, dtype=np.int64)
    single = sites.ndim == 1
    m = np.mod(np.atleast_2d(sites), tau)
    if single and f.family == "inverse_power_singularity":
        return f.eval(orbit_points(x, alpha, m, f.d)[0])
    vals = orbit_values(f, x, alpha, m)
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class ZTerm:
    j: tuple[int, ...]
    l1: int
    x_count: int
    y_count: int
    samples: int
    x_bound: float
    threshold_log: float

    @property
    def x_value(self) -> float:
        return self.x_count / self.samples

    @property
    def y_value(self) -> float:
        return self.y_count / self.samples

    @property
    def x_sigma(self) -> float:
        p = self.x_value
        return math.sqrt(p * (1 - p) / self.samples)

    @property
    def y_sigma(self) -> float:
        p = self.y_value
        return math.sqrt(p * (1 - p) / self.samples)

    @property
    def x_within_bound(self) -> bool:
        return self.x_value <= self.x_bound + 3 * self.x_sigma


@dataclass(frozen=True)
class ZTauResult:
    z: MeasureEstimate
    m_tau: float
    e_measure: float
    e_exact: float | None
    terms: tuple[ZTerm, ...]
    union_bound: float

    def as_rows(self) -> list[dict]:
        return [{"j": t.j, "l1": t.l1, "x_value": t.x_value, "x_sigma": t.x_sigma,
                 "x_bound": t.x_bound, "y_value": t.y_value, "y_sigma": t.y_sigma}
                for t in self.terms]


def index_box(d: int, tau: Sequence[int], delta: float) -> list[tuple[int, ...]]:
    """All ``j`` with ``|j_i| <= (2d + delta) prod(tau) / tau_i``."""
    prod = math.prod(tau)
    limits = [math.floor((2 * d + delta) * prod / t) for t in tau]
    return list(itertools.product(*(range(-lim, lim + 1) for lim in limits)))


def z_tau_measure(f: PotentialSpec, alpha, tau: Sequence[int], gamma: float, delta: float,
                  mc: MCParams = MCParams(), max_terms: int = 5000,
                  m_tau: float | None = None) -> ZTauResult:
    """Estimate the exceptional set built from the shift sets ``X_j`` and ``Y_j``.

    ``X_j = {x : |f(x + j*tau*alpha) - f(x)| >= |j|_1 M^(-(2d+gamma) prod(tau))}``
    and ``Y_j = {x : |f(x + j*tau*alpha)| > M}`` with ``M = m_tau_level``.
    Thresholds are handled as logs; below the smallest positive double a
    threshold is treated as ``0+`` and membership means ``f`` changed at all.
    All terms share one sample set, so the union estimate never exceeds the
    sum of the per-term estimates.
    """
    d = f.d
    tau = [int(t) for t in tau]
    if len(tau) != d or any(t < 1 for t in tau):
        raise InvalidInput("tau must have d components, each >= 1")
    if gamma <= 0 or not 0 < delta < gamma / 2:
        raise InvalidInput("need gamma > 0 and 0 < delta < gamma/2")
    js = index_box(d, tau, delta)
    if len(js) > max_terms:
        raise CostGuardExceeded(f"{len(js)} index vectors exceed the limit {max_terms}")
    prod = math.prod(tau)
    if m_tau is None:
        m_tau = m_tau_level(f, tau, mc)
    exponent = (2 * d + gamma) * prod
    log_m = math.log(m_tau) if m_tau > 0 else -math.inf
    a = _alpha_floats(alpha, d)
    tau_arr = np.asarray(tau, dtype=float)
    shifts = np.array([_reduce((np.asarray(j) * tau_arr * a)[None, :])[0] for j in js])
    thr_logs = []
    for j in js:
        l1 = sum(abs(ji) for ji in j)
        if l1 == 0:
            thr_logs.append(-math.inf)
        elif log_m == -math.inf:
            thr_logs.append(math.inf)  # M^(-positive) with M = 0
        else:
            thr_logs.append(math.log(l1) - exponent * log_m)
    n_terms = len(js)

    def counts(x):
        base = f.evaluate(x)
        out = np.zeros(2 * n_terms + 1, dtype=np.int64)
        union = np.zeros(x.shape[0], dtype=bool)
        for t in range(n_terms):
            shifted = f.evaluate(x + shifts[t])
            diff = np.abs(shifted - base)
            tl = thr_logs[t]
            if tl == math.inf:
                in_x = np.zeros_like(union)
            elif tl < LOG_TINY:
                in_x = diff != 0.0
            else:
                in_x = diff >= math.exp(tl)
            in_y = np.abs(shifted) > m_tau
            out[t] = np.count_nonzero(in_x)
            out[n_terms + t] = np.count_nonzero(in_y)
            union |= in_x | in_y
        out[-1] = np.count_nonzero(union)
        return out

    total = chunk_counts(counts, d, mc)
    n = mc.samples
    terms = tuple(
        ZTerm(j, sum(abs(ji) for ji in j), int(total[t]), int(total[n_terms + t]), n,
              sum(abs(ji) for ji in j) / float(prod) ** 3, thr_logs[t])
        for t, j in enumerate(js)
    )
    z = MeasureEstimate.from_counts(int(total[-1]), n, mc.seed, mc.confidence)
    e_est = e_set_measure(f, m_tau, mc)
    union_bound = sum(t.x_value + t.y_value for t in terms)
    return ZTauResult(z, m_tau, e_est.value, e_est.exact, terms, union_bound)
