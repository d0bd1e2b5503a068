"""Positive, unital, and contractive linear maps on matrix algebras.

Two representations: Kraus families {V_k} acting as x |-> sum_k V_k* x V_k,
and a generic action matrix on column-major vectorized inputs (needed for
maps with no Kraus form, such as the transpose). Generators produce the map
kinds the campaigns exercise, including positive-but-not-completely-positive
examples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg_core import (
    as_complex,
    complex_gaussian,
    frob,
    hermitian_eig,
    kron,
    random_unitary,
    rng_stream,
)
from .tensor_ops import TensorSpace

__all__ = [
    "PositiveMap",
    "MAP_KINDS",
    "apply_map",
    "choi_matrix",
    "identity_map",
    "transpose_map",
    "slice_compress_map",
    "random_positive_map",
    "map_flags",
    "MapFlags",
]

MAP_KINDS = ("ucp_stinespring", "transpose", "pinching", "scaled_contractive", "zero")

_UNITAL_TOL = 1e-10
_CONTRACTIVE_TOL = 1e-10


@dataclass(frozen=True)
class PositiveMap:
    """A linear map between matrix algebras with construction-time flags.

    Exactly one of `kraus` / `action` is set. Kraus maps act as
    sum_k V_k* x V_k with V_k of shape (in_dim, out_dim); generic maps act on
    column-major vectorizations through an (out_dim^2 x in_dim^2) matrix.
    Claimed flags record what the construction guarantees; `map_flags`
    re-derives them numerically.
    """

    kind: str
    in_dim: int
    out_dim: int
    kraus: tuple[np.ndarray, ...] | None = None
    action: np.ndarray | None = field(default=None, repr=False)
    claimed_positive: bool = True
    claimed_unital: bool = False
    claimed_contractive: bool = False

    def __post_init__(self) -> None:
        if (self.kraus is None) == (self.action is None):
            raise ValueError("exactly one of kraus/action must be provided")
        if self.kraus is not None:
            ops = tuple(as_complex(v) for v in self.kraus)
            for v in ops:
                if v.shape != (self.in_dim, self.out_dim):
                    raise DimensionError(
                        f"Kraus operator shape {v.shape} != ({self.in_dim}, {self.out_dim})"
                    )
            object.__setattr__(self, "kraus", ops)
        else:
            act = as_complex(self.action)
            if act.shape != (self.out_dim ** 2, self.in_dim ** 2):
                raise DimensionError(
                    f"action shape {act.shape} != ({self.out_dim ** 2}, {self.in_dim ** 2})"
                )
            object.__setattr__(self, "action", act)

    def __call__(self, x) -> np.ndarray:
        return apply_map(self, x)

    def on_identity(self) -> np.ndarray:
        return apply_map(self, np.eye(self.in_dim))


def _vec(x: np.ndarray) -> np.ndarray:
    """Column-major vectorization, fixed project-wide for generic maps."""
    return x.flatten(order="F")


def _unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return v.reshape((dim, dim), order="F")


def apply_map(phi: PositiveMap, x) -> np.ndarray:
    xm = as_complex(x)
    if xm.shape != (phi.in_dim, phi.in_dim):
        raise DimensionError(f"input shape {xm.shape} != ({phi.in_dim}, {phi.in_dim})")
    if phi.kraus is not None:
        out = np.zeros((phi.out_dim, phi.out_dim), dtype=np.complex128)
        for v in phi.kraus:
            out += v.conj().T @ xm @ v
        return out
    return _unvec(phi.action @ _vec(xm), phi.out_dim)


def choi_matrix(phi: PositiveMap) -> np.ndarray:
    """sum_ij E_ij (x) Phi(E_ij); positive semidefinite iff Phi is CP."""
    d = phi.in_dim
    n = phi.out_dim
    choi = np.zeros((d * n, d * n), dtype=np.complex128)
    basis = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            basis[i, j] = 1.0
            block = apply_map(phi, basis)
            choi[i * n:(i + 1) * n, j * n:(j + 1) * n] = block
            basis[i, j] = 0.0
    return choi


def identity_map(dim: int) -> PositiveMap:
    return PositiveMap(
        kind="identity", in_dim=dim, out_dim=dim,
        kraus=(np.eye(dim, dtype=np.complex128),),
        claimed_positive=True, claimed_unital=True, claimed_contractive=True,
    )


def conjugation_map(a, kind: str = "conjugation") -> PositiveMap:
    """x |-> a* x a; unital iff a is an isometry, contractive iff ||a|| <= 1."""
    am = as_complex(a)
    in_dim, out_dim = am.shape
    gram = am.conj().T @ am
    unital = frob(gram - np.eye(out_dim)) <= _UNITAL_TOL
    contractive = float(hermitian_eig(gram).eigenvalues[-1]) <= 1.0 + _CONTRACTIVE_TOL
    return PositiveMap(
        kind=kind, in_dim=in_dim, out_dim=out_dim, kraus=(am,),
        claimed_positive=True, claimed_unital=unital, claimed_contractive=contractive,
    )


def transpose_map(dim: int) -> PositiveMap:
    """The transpose: positive and unital but not completely positive."""
    act = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            # vec index of entry (m, n) is m + n*dim; transpose sends (i, j) -> (j, i)
            act[j + i * dim, i + j * dim] = 1.0
    return PositiveMap(
        kind="transpose", in_dim=dim, out_dim=dim, action=act,
        claimed_positive=True, claimed_unital=True, claimed_contractive=True,
    )


def pinching_map(projections: list[np.ndarray], kind: str = "pinching") -> PositiveMap:
    ps = tuple(as_complex(p) for p in projections)
    dim = ps[0].shape[0]
    return PositiveMap(
        kind=kind, in_dim=dim, out_dim=dim, kraus=ps,
        claimed_positive=True, claimed_unital=True, claimed_contractive=True,
    )


def slice_compress_map(a, space: TensorSpace, w1: float) -> PositiveMap:
    """X |-> w1 * (Tr_1 (x) id)[(a* (x) 1) X (a (x) 1)] as a Kraus map.

    Completely positive; unital exactly when the weighted trace
    w1 * Tr(a* a) equals 1, contractive when it is <= 1.
    """
    am = as_complex(a)
    if am.shape != (space.d1, space.d1):
        raise DimensionError(f"a has shape {am.shape}, expected ({space.d1}, {space.d1})")
    if w1 <= 0:
        raise ValueError("trace weight must be positive")
    eye2 = np.eye(space.d2)
    root = np.sqrt(w1)
    ops = tuple(root * kron(am[:, i:i + 1], eye2) for i in range(space.d1))
    norm_sq = w1 * float(np.trace(am.conj().T @ am).real)
    return PositiveMap(
        kind="slice_compress", in_dim=space.total_dim, out_dim=space.d2, kraus=ops,
        claimed_positive=True,
        claimed_unital=abs(norm_sq - 1.0) <= _UNITAL_TOL,
        claimed_contractive=norm_sq <= 1.0 + _CONTRACTIVE_TOL,
    )


def _random_partition(n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Split range(n) into 2..min(4, n) consecutive nonempty groups."""
    if n == 1:
        return [np.array([0])]
    k = int(rng.integers(2, min(4, n) + 1))
    cuts = sorted(rng.choice(np.arange(1, n), size=k - 1, replace=False).tolist())
    bounds = [0] + cuts + [n]
    return [np.arange(a, b) for a, b in zip(bounds, bounds[1:])]


def random_positive_map(kind: str, in_dim: int, out_dim: int, seed_or_rng) -> PositiveMap:
    """Seeded generator over the supported map kinds.

    ucp_stinespring: V*(x (x) 1_e)V for a Haar isometry V (unital, CP).
    transpose:       positive and unital, not CP (negative Choi eigenvalue).
    pinching:        from a random resolution of the identity (unital, CP).
    scaled_contractive: c * Psi for a UCP Psi, c uniform in (0, 1).
    zero:            the zero map (positive and contractive, not unital).
    """
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else rng_stream(seed_or_rng)
    if in_dim < 1 or out_dim < 1:
        raise DimensionError("map dimensions must be >= 1")
    if kind == "transpose":
        return transpose_map(in_dim)
    if kind == "zero":
        return PositiveMap(
            kind="zero", in_dim=in_dim, out_dim=out_dim,
            kraus=(np.zeros((in_dim, out_dim), dtype=np.complex128),),
            claimed_positive=True, claimed_unital=False, claimed_contractive=True,
        )
    if kind == "pinching":
        u = random_unitary(in_dim, rng)
        ps = []
        for group in _random_partition(in_dim, rng):
            cols = u[:, group]
            ps.append(cols @ cols.conj().T)
        return pinching_map(ps)
    if kind in ("ucp_stinespring", "scaled_contractive"):
        env = 2
        while in_dim * env < out_dim:
            env += 1
        g = complex_gaussian(rng, in_dim * env, out_dim)
        q, r = np.linalg.qr(g)
        diag = np.diag(r)
        isometry = q * (diag / np.abs(diag))
        ops = tuple(
            np.ascontiguousarray(isometry[k::env, :]) for k in range(env)
        )
        if kind == "ucp_stinespring":
            return PositiveMap(
                kind=kind, in_dim=in_dim, out_dim=out_dim, kraus=ops,
                claimed_positive=True, claimed_unital=True, claimed_contractive=True,
            )
        c = float(rng.uniform())
        scaled = tuple(np.sqrt(c) * v for v in ops)
        return PositiveMap(
            kind=kind, in_dim=in_dim, out_dim=out_dim, kraus=scaled,
            claimed_positive=True, claimed_unital=False, claimed_contractive=True,
        )
    raise ValueError(f"unknown map kind {kind!r}; expected one of {MAP_KINDS}")


@dataclass(frozen=True)
class MapFlags:
    unital: bool
    contractive: bool
    positivity_sampled: bool


def map_flags(phi: PositiveMap, trials: int = 16, seed: int = 0) -> MapFlags:
    """Numerically derived flags.

    Unitality from ||Phi(1) - 1||_F; contractivity from the largest
    eigenvalue of Phi(1), which characterizes it for positive maps;
    positivity sampled on random rank-deficient inputs g g*.
    """
    one_img = phi.on_identity()
    unital = frob(one_img - np.eye(phi.out_dim)) <= _UNITAL_TOL
    lam_max = float(hermitian_eig(one_img).eigenvalues[-1])
    contractive = lam_max <= 1.0 + _CONTRACTIVE_TOL
    rng = rng_stream(seed)
    positive = True
    for _ in range(trials):
        g = complex_gaussian(rng, phi.in_dim, phi.in_dim)
        x = g @ g.conj().T
        out = apply_map(phi, x)
        out = 0.5 * (out + out.conj().T)
        lam_min = float(hermitian_eig(out).eigenvalues[0])
        scale = max(1.0, float(np.max(np.abs(hermitian_eig(out).eigenvalues))))
        if lam_min < -1e-10 * scale:
            positive = False
            break
    return MapFlags(unital=unital, contractive=contractive, positivity_sampled=positive)
