"""Bipartite tensor-product spaces and weighted trace machinery.

Embeddings a ⊗ 1, conjugation-compression, weighted partial traces, and the
left/right slice maps that collapse one tensor factor against a linear
functional. The first tensor factor is always the slow (outer) index.

Weighted traces model finite direct sums of matrix factors: on a block
algebra with blocks n_k and weights w_k > 0, the trace of a block-diagonal x
is sum_k w_k * Tr(x_k). A tensor factor is a single block with one weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg_core import as_complex, kron

__all__ = [
    "TensorSpace",
    "BlockAlgebra",
    "LinearFunctional",
    "embed",
    "conjugate_compress",
    "partial_trace",
    "slice_map",
]


@dataclass(frozen=True)
class TensorSpace:
    d1: int
    d2: int

    def __post_init__(self) -> None:
        if self.d1 < 1 or self.d2 < 1:
            raise DimensionError(f"tensor factor dims must be >= 1, got {self.d1}x{self.d2}")

    @property
    def total_dim(self) -> int:
        return self.d1 * self.d2

    def factor_dim(self, side: str) -> int:
        if side == "left":
            return self.d1
        if side == "right":
            return self.d2
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    def reshape4(self, x: np.ndarray) -> np.ndarray:
        """View a (d1 d2) x (d1 d2) matrix as a 4-index tensor [i1,i2,j1,j2]."""
        if x.shape != (self.total_dim, self.total_dim):
            raise DimensionError(
                f"matrix shape {x.shape} does not match space {self.d1}x{self.d2}"
            )
        return x.reshape(self.d1, self.d2, self.d1, self.d2)


@dataclass(frozen=True)
class BlockAlgebra:
    """Direct sum of matrix factors M_{n_k} carrying trace weights w_k > 0."""

    block_dims: tuple[int, ...]
    trace_weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        object.__setattr__(self, "trace_weights", tuple(float(w) for w in self.trace_weights))
        if len(self.block_dims) != len(self.trace_weights):
            raise DimensionError("block_dims and trace_weights must have equal length")
        if not self.block_dims:
            raise DimensionError("a block algebra needs at least one block")
        if any(d < 1 for d in self.block_dims):
            raise DimensionError("block dimensions must be >= 1")
        if any(w <= 0 for w in self.trace_weights):
            raise ValueError("trace weights must be strictly positive")

    @classmethod
    def single(cls, dim: int, weight: float = 1.0) -> "BlockAlgebra":
        return cls((dim,), (weight,))

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for d in self.block_dims:
            out.append(slice(start, start + d))
            start += d
        return out

    def blocks(self, x: np.ndarray) -> list[np.ndarray]:
        a = as_complex(x)
        if a.shape != (self.total_dim, self.total_dim):
            raise DimensionError(
                f"matrix shape {a.shape} does not match algebra of total dim {self.total_dim}"
            )
        return [a[s, s] for s in self.block_slices()]

    def trace(self, x: np.ndarray) -> float:
        """Weighted trace sum_k w_k Tr(x_k) of a (block-diagonal) element."""
        total = 0.0 + 0.0j
        for w, blk in zip(self.trace_weights, self.blocks(x)):
            total += w * np.trace(blk)
        return float(total.real)

    def off_block_mass(self, x: np.ndarray) -> float:
        """Frobenius mass of x outside the block diagonal."""
        a = as_complex(x)
        rest = a.copy()
        for s in self.block_slices():
            rest[s, s] = 0.0
        return float(np.linalg.norm(rest))

    def from_blocks(self, blocks: list[np.ndarray]) -> np.ndarray:
        out = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        for s, blk in zip(self.block_slices(), blocks):
            out[s, s] = blk
        return out


@dataclass(frozen=True)
class LinearFunctional:
    """Normal functional omega(y) = tau(density* y) on a block algebra."""

    algebra: BlockAlgebra
    density: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        d = as_complex(self.density)
        if d.shape != (self.algebra.total_dim, self.algebra.total_dim):
            raise DimensionError("density shape does not match the algebra")
        object.__setattr__(self, "density", d)

    @classmethod
    def from_state(cls, density: np.ndarray, weight: float = 1.0) -> "LinearFunctional":
        d = as_complex(density)
        return cls(BlockAlgebra.single(d.shape[0], weight), d)

    def __call__(self, y: np.ndarray) -> complex:
        total = 0.0 + 0.0j
        dens_blocks = self.algebra.blocks(self.density)
        for w, dblk, yblk in zip(
            self.algebra.trace_weights, dens_blocks, self.algebra.blocks(y)
        ):
            total += w * np.trace(dblk.conj().T @ yblk)
        return complex(total)


def embed(a, side: str, space: TensorSpace) -> np.ndarray:
    """a |-> a (x) 1 (side='left') or 1 (x) a (side='right')."""
    m = as_complex(a)
    d = space.factor_dim(side)
    if m.shape != (d, d):
        raise DimensionError(f"factor matrix shape {m.shape} does not match dim {d}")
    if side == "left":
        return kron(m, np.eye(space.d2))
    return kron(np.eye(space.d1), m)


def conjugate_compress(x, a, space: TensorSpace) -> np.ndarray:
    """(a* (x) 1) X (a (x) 1) for a acting on the first factor."""
    xm = as_complex(x)
    if xm.shape != (space.total_dim, space.total_dim):
        raise DimensionError(
            f"matrix shape {xm.shape} does not match space {space.d1}x{space.d2}"
        )
    e = embed(a, "left", space)
    return e.conj().T @ xm @ e


def partial_trace(
    x,
    side: str,
    space: TensorSpace,
    weights: tuple[float, float] = (1.0, 1.0),
) -> np.ndarray:
    """Weighted partial trace over one factor.

    side='trace_first':  result[j2, k2] = w1 * sum_i1 X[(i1, j2), (i1, k2)]
    side='trace_second': result[i1, j1] = w2 * sum_i2 X[(i1, i2), (j1, i2)]

    Linear, *-compatible, and positivity-preserving; w1, w2 are the trace
    weights of the single-block factor algebras.
    """
    t = space.reshape4(as_complex(x))
    w1, w2 = float(weights[0]), float(weights[1])
    if side == "trace_first":
        return w1 * np.trace(t, axis1=0, axis2=2)
    if side == "trace_second":
        return w2 * np.trace(t, axis1=1, axis2=3)
    raise ValueError(f"side must be 'trace_first' or 'trace_second', got {side!r}")


def slice_map(
    x,
    functional: LinearFunctional,
    side: str,
    space: TensorSpace,
) -> np.ndarray:
    """Slice one tensor factor against a functional.

    side='right': R_omega with omega on the second factor,
        R(a (x) b) = a * omega(b), output on the first factor.
    side='left':  L_omega with omega on the first factor,
        L(a (x) b) = omega(a) * b, output on the second factor.

    Computed as a weighted partial trace against the functional's density;
    positive functionals give positivity-preserving slices.
    """
    t = space.reshape4(as_complex(x))
    alg = functional.algebra
    sliced_dim = space.d2 if side == "right" else space.d1
    if alg.total_dim != sliced_dim:
        raise DimensionError(
            f"functional lives on dim {alg.total_dim}, sliced factor has dim {sliced_dim}"
        )
    dens = functional.density.conj()
    weight_mask = np.zeros((sliced_dim, sliced_dim))
    for w, s in zip(alg.trace_weights, alg.block_slices()):
        weight_mask[s, s] = w
    dens = dens * weight_mask
    if side == "right":
        return np.einsum("lk,iljk->ij", dens, t)
    if side == "left":
        return np.einsum("lk,likj->ij", dens, t)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")
