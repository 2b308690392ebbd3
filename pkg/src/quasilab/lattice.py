"""Finite-box lattice Hamiltonians: assembly, spectra, localization, transport.

Sites of a box with sides ``L_1..L_d`` are the integer points
``0 <= n_i < L_i``, numbered row-major (last axis fastest), matching
``numpy.ravel_multi_index``.  The operator is

    (H u)_n = sum over l1-neighbours m of u_m  +  f(x + n*alpha) u_n

with Dirichlet (hops leaving the box dropped) or periodic (wrap-around)
boundaries.
"""
from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import eigsh
from scipy.special import jv

from .contfrac import Frequency
from .errors import (DimensionCapExceeded, InsufficientPrecision, InvalidInput,
                     PropagationRefused, SingularEvaluation)
from .freqcond import FrequencyVector
from .potential import PotentialSpec

__all__ = [
    "BoxHamiltonian", "Spectrum", "TransportTable", "assemble", "from_diagonal",
    "disorder_hamiltonian", "spectrum", "extremal", "ipr", "evolve",
    "write_eigenvectors", "read_eigenvectors", "site_coordinates",
]

DEFAULT_CAP = 4_000_000
DENSE_CAP = 4096
PHASE_ERROR_MAX = 1e-12
BOUNDARIES = ("dirichlet", "periodic")


@dataclass(frozen=True)
class BoxHamiltonian:
    d: int
    sides: tuple[int, ...]
    bc: str
    matrix: sp.csr_matrix
    diagonal: np.ndarray
    x: tuple[float, ...] | None = None
    alpha: FrequencyVector | None = None
    potential: PotentialSpec | None = None
    phase_error: float = 0.0

    @property
    def dim(self) -> int:
        return math.prod(self.sides)

    @property
    def potential_sup(self) -> float:
        if self.potential is not None and self.potential.bounded:
            return self.potential.declared_sup
        return float(np.max(np.abs(self.diagonal))) if self.dim else 0.0

    @property
    def norm_bound(self) -> float:
        """``2d + sup|f|``: bound on the operator norm."""
        return 2 * self.d + self.potential_sup


def site_coordinates(sides: Sequence[int]) -> np.ndarray:
    """``(N, d)`` integer coordinates in row-major site order."""
    return np.stack(np.unravel_index(np.arange(math.prod(sides)), tuple(sides)), axis=1)


def _check_sides(sides, bc, cap):
    sides = tuple(int(s) for s in sides)
    if not sides or any(s < 1 for s in sides):
        raise InvalidInput("box sides must be positive")
    if bc not in BOUNDARIES:
        raise InvalidInput(f"boundary must be one of {BOUNDARIES}")
    if bc == "periodic" and any(s < 3 for s in sides):
        # with L = 2 the wrap hop coincides with the interior hop
        raise InvalidInput("periodic boundaries need every side >= 3")
    dim = math.prod(sides)
    if dim > cap:
        raise DimensionCapExceeded(f"box dimension {dim} exceeds the cap {cap}")
    return sides


def _hopping(sides: tuple[int, ...], bc: str) -> sp.csr_matrix:
    dim = math.prod(sides)
    coords = site_coordinates(sides)
    idx = np.arange(dim)
    rows, cols = [], []
    stride = 1
    for axis in reversed(range(len(sides))):
        L = sides[axis]
        c = coords[:, axis]
        inner = c < L - 1
        rows.append(idx[inner])
        cols.append(idx[inner] + stride)
        if bc == "periodic":
            edge = c == L - 1
            rows.append(idx[edge])
            cols.append(idx[edge] - (L - 1) * stride)
        stride *= L
    r = np.concatenate(rows) if rows else np.empty(0, dtype=int)
    c = np.concatenate(cols) if cols else np.empty(0, dtype=int)
    upper = sp.coo_matrix((np.ones(r.size), (r, c)), shape=(dim, dim))
    return (upper + upper.T).tocsr()


def _axis_phases(x: float, alpha: Frequency, L: int) -> tuple[np.ndarray, float]:
    """``(x + n*alpha) mod 1`` for ``n < L`` from an exact convergent.

    ``n*p mod q`` is exact in integers, so the only errors are the convergent
    error times ``n`` and the final rounding.
    """
    try:
        level = alpha.level_for_error(Fraction(1, 2**100))
    except InsufficientPrecision:
        level = alpha.precision_depth - 1
    p, q = alpha.p(level), alpha.q(level)
    err = float(Fraction(1, q * alpha.q(level + 1))) * max(L - 1, 0)
    frac = [Fraction(n * p % q, q) for n in range(L)]
    phases = np.array([float(v) for v in frac]) + x
    return np.mod(phases, 1.0), err + 2.0**-52


def assemble(f: PotentialSpec, x, alpha, sides: Sequence[int], bc: str = "dirichlet",
             cap: int = DEFAULT_CAP) -> BoxHamiltonian:
    """Build the box operator for ``f`` along the orbit of ``x`` under ``alpha``."""
    sides = _check_sides(sides, bc, cap)
    d = len(sides)
    if f.d != d:
        raise InvalidInput(f"potential is {f.d}-dimensional, box is {d}-dimensional")
    if isinstance(alpha, Frequency):
        alpha = FrequencyVector.of(alpha)
    if not isinstance(alpha, FrequencyVector) or alpha.d != d:
        raise InvalidInput(f"alpha must be a FrequencyVector with {d} components")
    x = tuple(float(v) for v in np.atleast_1d(x))
    if len(x) != d:
        raise InvalidInput(f"phase must have {d} components")
    axes, error = [], 0.0
    for xi, a, L in zip(x, alpha, sides):
        ph, e = _axis_phases(xi, a, L)
        axes.append(ph)
        error = max(error, e)
    if error > PHASE_ERROR_MAX:
        raise InsufficientPrecision(f"site phase error {error:.3g} exceeds {PHASE_ERROR_MAX}")
    coords = site_coordinates(sides)
    points = np.stack([axes[i][coords[:, i]] for i in range(d)], axis=1)
    if f.family == "inverse_power_singularity":
        delta = np.abs(points - np.asarray(f.center))
        hit = np.all(np.minimum(delta, 1.0 - delta) == 0.0, axis=1)
        if hit.any():
            site = tuple(int(v) for v in coords[np.argmax(hit)])
            raise SingularEvaluation(f"site {site} lands on the singularity")
    diag = f.evaluate(points)
    matrix = (_hopping(sides, bc) + sp.diags(diag)).tocsr()
    return BoxHamiltonian(d, sides, bc, matrix, diag, x, alpha, f, error)


def from_diagonal(diagonal, sides: Sequence[int], bc: str = "dirichlet",
                  cap: int = DEFAULT_CAP) -> BoxHamiltonian:
    """Box operator with an arbitrary on-site potential (row-major order)."""
    sides = _check_sides(sides, bc, cap)
    diag = np.asarray(diagonal, dtype=float).reshape(-1)
    if diag.size != math.prod(sides):
        raise InvalidInput("diagonal length must equal the box dimension")
    matrix = (_hopping(sides, bc) + sp.diags(diag)).tocsr()
    return BoxHamiltonian(len(sides), sides, bc, matrix, diag)


def disorder_hamiltonian(sides: Sequence[int], strength: float = 10.0, seed: int = 0,
                         bc: str = "dirichlet") -> BoxHamiltonian:
    """I.i.d. uniform ``[-strength, strength]`` on-site values (test stub)."""
    rng = np.random.default_rng(seed)
    diag = rng.uniform(-strength, strength, size=math.prod(int(s) for s in sides))
    return from_diagonal(diag, sides, bc)


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray | None = None


def spectrum(H: BoxHamiltonian, want_vectors: bool = False, dense_cap: int = DENSE_CAP) -> Spectrum:
    """All eigenvalues, ascending; orthonormal eigenvectors as columns if asked."""
    if H.dim > dense_cap:
        raise DimensionCapExceeded(
            f"dimension {H.dim} exceeds the dense cap {dense_cap}; use extremal() "
            "for a few eigenvalues at the spectrum edges")
    if H.d == 1 and H.bc == "dirichlet":
        off = np.ones(H.dim - 1)
        if want_vectors:
            w, v = eigh_tridiagonal(H.diagonal, off)
            return Spectrum(w, v)
        return Spectrum(eigh_tridiagonal(H.diagonal, off, eigvals_only=True))
    dense = H.matrix.toarray()
    if want_vectors:
        w, v = eigh(dense)
        return Spectrum(w, v)
    return Spectrum(eigh(dense, eigvals_only=True))


def extremal(H: BoxHamiltonian, k: int = 6, which: str = "BE") -> Spectrum:
    """A few extremal eigenpairs by Lanczos (``which`` as in ``eigsh``)."""
    if not 0 < k < H.dim:
        raise InvalidInput("need 0 < k < dimension")
    w, v = eigsh(H.matrix, k=k, which=which)
    order = np.argsort(w)
    return Spectrum(w[order], v[:, order])


def ipr(v) -> float:
    """Inverse participation ratio ``sum |v_n|^4`` of a unit vector."""
    v = np.asarray(v)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-8:
        raise InvalidInput(f"vector must be normalized (norm {norm:.12g})")
    p = np.abs(v) ** 2
    return float(np.sum(p * p))


@dataclass(frozen=True)
class TransportTable:
    times: np.ndarray
    norm: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    origin: tuple[int, ...]
    order: int
    substeps: int
    boundary_warning: str | None = None
    columns: tuple[str, ...] = field(default=("t", "norm", "x1", "x2"))

    def rows(self) -> list[tuple[float, ...]]:
        return list(zip(self.times, self.norm, self.x1, self.x2))


def _gershgorin(H: BoxHamiltonian) -> tuple[float, float]:
    radii = np.asarray(abs(H.matrix).sum(axis=1)).ravel() - np.abs(H.diagonal)
    return float(np.min(H.diagonal - radii)), float(np.max(H.diagonal + radii))


def chebyshev_order(z: float, tol: float) -> int:
    """Smallest ``K > z`` with ``2 (z/2)^K / K! < tol``.

    ``|J_k(z)| <= (z/2)^k / k!`` and the ratio of consecutive bounds is below
    ``1/2`` once ``k > z``, so the neglected tail is at most twice the first
    omitted term.
    """
    k = max(1, math.ceil(z))
    while True:
        log_term = math.log(2) + k * math.log(max(z, 1e-300) / 2) - math.lgamma(k + 1)
        if log_term < math.log(tol) - math.log(2):
            return k
        k += 1


def _cheb_step(matrix, u, center, half_width, h, order):
    # exp(-i h H) u = exp(-i h c) sum_k (2 - [k=0]) (-i)^k J_k(a h) T_k(Hs) u
    z = half_width * h
    coeffs = jv(np.arange(order + 1), z)

    def apply(v):
        return (matrix @ v - center * v) / half_width

    t_prev, t_cur = u, apply(u)
    acc = coeffs[0] * t_prev + 2 * (-1j) * coeffs[1] * t_cur
    for k in range(2, order + 1):
        t_prev, t_cur = t_cur, 2 * apply(t_cur) - t_prev
        acc += 2 * (-1j) ** k * coeffs[k] * t_cur
    return np.exp(-1j * h * center) * acc


def evolve(H: BoxHamiltonian, u0, times: Sequence[float], tol: float = 1e-12,
           max_step: float = 50.0, max_order: int = 5000, drift_max: float = 1e-8) -> TransportTable:
    """Propagate ``exp(-itH) u0`` by Chebyshev expansion and tabulate moments.

    The Gershgorin interval ``[c - a, c + a]`` encloses the spectrum.  Each
    sub-step ``h`` has ``a h <= max_step`` and uses ``chebyshev_order(a h, tol)``
    terms.  Moments ``<|X|^p>`` (Euclidean distance, p = 1, 2) are taken
    about the site where ``|u0|`` is largest.
    """
    u = np.asarray(u0, dtype=complex).reshape(-1)
    if u.size != H.dim:
        raise InvalidInput("initial vector has the wrong dimension")
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise InvalidInput("initial vector must be normalized")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise InvalidInput("times must be a nondecreasing grid of nonnegative values")
    lo, hi = _gershgorin(H)
    center, half = (lo + hi) / 2, max((hi - lo) / 2, 1e-300)

    coords = site_coordinates(H.sides)
    start = int(np.argmax(np.abs(u)))
    origin = coords[start]
    offset = coords - origin
    if H.bc == "periodic":
        L = np.asarray(H.sides)
        offset = (offset + L // 2) % L - L // 2
    dist = np.sqrt(np.sum(offset.astype(float) ** 2, axis=1))

    warning = None
    t_max = float(times[-1]) if times.size else 0.0
    room = min(min(int(o), L - 1 - int(o)) for o, L in zip(origin, H.sides))
    if H.bc == "periodic":
        room = min(L // 2 for L in H.sides)
    if room < 2 * H.d * t_max + 10:
        warning = (f"wavefront (speed <= {2 * H.d}) may reach the boundary by t={t_max:g}; "
                   f"nearest boundary is {room} sites away")
        warnings.warn(warning, RuntimeWarning, stacklevel=2)

    norms, x1, x2 = [], [], []
    t_now, max_order_used, steps = 0.0, 0, 0
    for t in times:
        span = t - t_now
        n_sub = max(1, math.ceil(span * half / max_step)) if span > 0 else 0
        for _ in range(n_sub):
            h = span / n_sub
            order = chebyshev_order(half * h, tol)
            if order > max_order:
                raise PropagationRefused(f"Chebyshev order {order} exceeds {max_order}")
            u = _cheb_step(H.matrix, u, center, half, h, order)
            max_order_used = max(max_order_used, order)
            steps += 1
        t_now = t
        prob = np.abs(u) ** 2
        norm = math.sqrt(float(np.sum(prob)))
        if abs(norm - 1.0) > drift_max:
            raise PropagationRefused(f"norm drift {abs(norm - 1.0):.3g} at t={t:g} exceeds {drift_max}")
        norms.append(norm)
        x1.append(float(prob @ dist))
        x2.append(float(prob @ (dist * dist)))
    return TransportTable(times, np.array(norms), np.array(x1), np.array(x2),
                          tuple(int(v) for v in origin), max_order_used, steps, warning)


# Eigenvector dump: little-endian
#   4 bytes  magic b"QLEV"
#   uint32   format version (1)
#   uint64   dimension N
#   uint64   number of vectors K
#   K float64 eigenvalues
#   K*N float64, vector j occupying entries j*N .. (j+1)*N - 1 (row-major sites)
_MAGIC = b"QLEV"
_HEADER = struct.Struct("<4sIQQ")


def write_eigenvectors(path, values, vectors) -> None:
    values = np.asarray(values, dtype="<f8")
    vectors = np.asarray(vectors, dtype="<f8")
    n, k = vectors.shape
    if values.shape != (k,):
        raise InvalidInput("one eigenvalue per eigenvector column is required")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, n, k))
        fh.write(values.tobytes())
        fh.write(np.ascontiguousarray(vectors.T).tobytes())


def read_eigenvectors(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, k = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != 1:
        raise InvalidInput(f"{path} is not an eigenvector dump")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != k + n * k:
        raise InvalidInput(f"{path} is truncated")
    return body[:k].copy(), body[k:].reshape(k, n).T.copy()
