"""Dense complex matrix arithmetic.

Hermitian eigendecomposition (cyclic complex Jacobi), spectral functional
calculus, Kronecker products, and seeded random generators for every kind of
test object the verification campaigns consume.

Conventions fixed project-wide:
  * the FIRST tensor factor is the slow (outer) index;
  * randomness flows through numpy PCG64 generators derived from explicit
    integer entropy tuples, so identical (kind, dims, seed) always reproduces
    the same object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionError, DomainError, NonHermitianError, NumericError

if TYPE_CHECKING:
    from .convex_catalog import ScalarFunction

_MAX_SWEEPS = 100
_OFF_DIAG_FACTOR = 1e-14
_HERMITIZE_REJECT = 1e-8


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances threaded through every check."""

    atol: float = 1e-9
    rtol: float = 1e-9
    eig_cluster_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.atol < 0 or self.rtol < 0 or self.eig_cluster_tol < 0:
            raise ValueError("tolerances must be nonnegative")

    def bound(self, *values: float) -> float:
        """One-sided pass margin: atol + rtol * max(1, |values|...)."""
        scale = 1.0
        for v in values:
            scale = max(scale, abs(v))
        return self.atol + self.rtol * scale


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order, eigenvectors as unitary columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def as_complex(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise NumericError("matrix contains non-finite entries")
    return a


def require_square(m: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def frob(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def hermitize(m, reject_at: float = _HERMITIZE_REJECT) -> np.ndarray:
    """Replace m by (m + m*)/2; reject if the correction is too large.

    The correction bound is relative to ||m||_F, so genuine misuse (a
    non-self-adjoint argument) raises instead of being silently symmetrized.
    """
    a = require_square(as_complex(m))
    h = 0.5 * (a + a.conj().T)
    correction = frob(a - h)
    if correction > reject_at * max(frob(a), 1e-300):
        raise NonHermitianError(
            f"matrix is not self-adjoint: ||M - M*||_F/2 = {correction:.3e} "
            f"exceeds {reject_at:.1e} * ||M||_F"
        )
    return h


def symmetrize(m) -> np.ndarray:
    """(m + m*)/2 with no misuse check, for quantities Hermitian by
    construction whose asymmetry is float dust."""
    a = require_square(as_complex(m))
    return 0.5 * (a + a.conj().T)


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _round_robin_pairs(n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Rounds of disjoint (p, q) pairs covering every pair exactly once.

    Circle-method tournament schedule; fixed and deterministic per n.
    """
    players: list[int | None] = list(range(n)) + ([None] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            x, y = players[i], players[m - 1 - i]
            if x is not None and y is not None:
                pairs.append((min(x, y), max(x, y)))
        rounds.append(tuple(pairs))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


_SCHEDULE_CACHE: dict[int, tuple[tuple[tuple[int, int], ...], ...]] = {}


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix.

    Each sweep visits every strict-upper pair exactly once, in a fixed
    round-robin order of mutually disjoint pairs; the rotations of one round
    commute, so they are applied as a single unitary. Stops once the
    off-diagonal Frobenius mass drops below 1e-14 * ||a||_F; raises after
    100 sweeps without convergence.
    """
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return np.array([a[0, 0].real]), v
    norm = frob(a)
    if norm == 0.0:
        return np.zeros(n), v
    target = _OFF_DIAG_FACTOR * norm
    skip = target / (2.0 * n)
    rounds = _SCHEDULE_CACHE.get(n)
    if rounds is None:
        rounds = _SCHEDULE_CACHE.setdefault(n, _round_robin_pairs(n))
    eye = np.eye(n, dtype=np.complex128)
    converged = False
    for _ in range(_MAX_SWEEPS):
        if _offdiag_norm(a) <= target:
            converged = True
            break
        for pairs in rounds:
            u = None
            rotated = []
            for p, q in pairs:
                apq = a[p, q]
                g = abs(apq)
                if g <= skip:
                    continue
                alpha = a[p, p].real
                beta = a[q, q].real
                tau = (alpha - beta) / (2.0 * g)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                phase = apq / g
                if u is None:
                    u = eye.copy()
                u[p, p] = c
                u[p, q] = -s * phase
                u[q, p] = s * phase.conjugate()
                u[q, q] = c
                rotated.append((p, q))
            if u is None:
                continue
            a = u.conj().T @ a @ u
            v = v @ u
            for p, q in rotated:
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    if not converged and _offdiag_norm(a) > target:
        raise NumericError(
            f"Jacobi eigensolver did not converge in {_MAX_SWEEPS} sweeps "
            f"(off-diagonal mass {_offdiag_norm(a):.3e}, target {target:.3e})"
        )
    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def hermitian_eig(m) -> SpectralDecomposition:
    """Eigendecomposition of a self-adjoint matrix, eigenvalues ascending.

    The input is symmetrized to (m + m*)/2 first; a correction larger than
    1e-8 * ||m||_F is rejected as misuse. Deterministic for identical input.
    """
    h = hermitize(m)
    w, v = _jacobi(h.copy())
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def matrix_function(
    m,
    f: "ScalarFunction",
    decomp: SpectralDecomposition | None = None,
) -> np.ndarray:
    """Spectral functional calculus: U f(Lambda) U* for self-adjoint m.

    Every eigenvalue must lie in f's domain; eigenvalues within float dust
    (1e-12 relative) of a closed endpoint are clamped onto it. Passing a
    precomputed decomposition skips the eigensolve.
    """
    dec = decomp if decomp is not None else hermitian_eig(m)
    vals = np.empty(dec.dim, dtype=np.float64)
    for i, t in enumerate(dec.eigenvalues):
        vals[i] = f(_fit_to_domain(float(t), f))
    u = dec.eigenvectors
    out = (u * vals) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def _fit_to_domain(t: float, f: "ScalarFunction") -> float:
    dom = f.domain
    if dom.contains(t):
        return t
    for endpoint, is_open in ((dom.lo, dom.lo_open), (dom.hi, dom.hi_open)):
        if math.isfinite(endpoint) and not is_open:
            if abs(t - endpoint) <= 1e-12 * max(1.0, abs(endpoint)):
                return endpoint
    raise DomainError(
        f"eigenvalue {t!r} lies outside the domain {dom} of function {f.name!r}"
    )


def kron(a, b) -> np.ndarray:
    """Kronecker product with the first factor as the slow (outer) index."""
    return np.kron(as_complex(a), as_complex(b))


def opnorm(m) -> float:
    """Largest singular value."""
    a = as_complex(m)
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


# ---------------------------------------------------------------------------
# Seeded random test objects
# ---------------------------------------------------------------------------

RANDOM_KINDS = (
    "hermitian",
    "density",
    "contraction",
    "unitary",
    "unit_vector",
    "l2_normalized",
)


def rng_stream(*entropy: int) -> np.random.Generator:
    """A PCG64 stream keyed by an integer tuple.

    Distinct tuples give independent streams; the same tuple always gives the
    same stream, which is what makes parallel campaigns replayable.
    """
    return np.random.default_rng(np.random.SeedSequence([int(e) for e in entropy]))


def stream_token(*entropy: int) -> int:
    """Deterministic 64-bit label for the stream keyed by `entropy`."""
    ss = np.random.SeedSequence([int(e) for e in entropy])
    return int(ss.generate_state(1, np.uint64)[0])


def _check_dim(dim: int) -> int:
    if int(dim) < 1:
        raise DimensionError(f"dimension must be >= 1, got {dim}")
    return int(dim)


def complex_gaussian(rng: np.random.Generator, rows: int, cols: int | None = None) -> np.ndarray:
    shape = (rows,) if cols is None else (rows, cols)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    d = _check_dim(dim)
    g = complex_gaussian(rng, d, d)
    return 0.5 * (g + g.conj().T)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    d = _check_dim(dim)
    g = complex_gaussian(rng, d, d)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_contraction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Strict contraction: Gaussian matrix scaled to operator norm 1/(1+u)."""
    d = _check_dim(dim)
    g = complex_gaussian(rng, d, d)
    u = rng.uniform()
    return g / (opnorm(g) * (1.0 + u))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a Gaussian matrix, diagonal phases fixed."""
    d = _check_dim(dim)
    q, r = np.linalg.qr(complex_gaussian(rng, d, d))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    d = _check_dim(dim)
    v = complex_gaussian(rng, d)
    return v / np.linalg.norm(v)


def random_l2_normalized(dim: int, rng: np.random.Generator, weight: float = 1.0) -> np.ndarray:
    """Random a with weighted trace w * Tr(a* a) = 1."""
    d = _check_dim(dim)
    g = complex_gaussian(rng, d, d)
    norm_sq = weight * float(np.trace(g.conj().T @ g).real)
    return g / math.sqrt(norm_sq)


def random_instance(kind: str, dim: int, seed: int, weight: float = 1.0):
    """Seeded dispatcher over the generators above; deterministic per
    (kind, dim, seed)."""
    rng = rng_stream(seed)
    if kind == "hermitian":
        return random_hermitian(dim, rng)
    if kind == "density":
        return random_density(dim, rng)
    if kind == "contraction":
        return random_contraction(dim, rng)
    if kind == "unitary":
        return random_unitary(dim, rng)
    if kind == "unit_vector":
        return random_unit_vector(dim, rng)
    if kind == "l2_normalized":
        return random_l2_normalized(dim, rng, weight)
    raise ValueError(f"unknown random kind {kind!r}; expected one of {RANDOM_KINDS}")


def psd_sqrt(m, decomp: SpectralDecomposition | None = None) -> np.ndarray:
    """Positive square root of a positive semidefinite matrix."""
    dec = decomp if decomp is not None else hermitian_eig(m)
    w = np.sqrt(np.clip(dec.eigenvalues, 0.0, None))
    u = dec.eigenvectors
    out = (u * w) @ u.conj().T
    return 0.5 * (out + out.conj().T)
