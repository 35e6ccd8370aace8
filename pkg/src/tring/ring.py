"""Tensor ring representation.

A d-dimensional tensor is stored as d order-3 cores; core k has shape
(r_k, n_k, r_{k+1}) with the bond index wrapping around, r_{d+1} = r_1.
The entry at multi-index (i_1, ..., i_d) is the trace of the product of
the picked core slices:

    t(i_1, ..., i_d) = trace( Z_1[:, i_1, :] @ ... @ Z_d[:, i_d, :] )

Rotating the core list left by k represents exactly the tensor whose
modes are rotated left by k.  ``to_dense`` keeps that statement true
bitwise, not just to rounding: it always contracts left-to-right from a
canonical head chosen by content (the lexicographically least rotation
of the core list), so a rotated ring performs the identical float
operations and only the final index relabeling differs.
"""

from __future__ import annotations

import math

import numpy as np

from .dense import DenseTensor, circular_shift_dims
from .errors import CapacityError

__all__ = [
    "TRTensor",
    "left_unfold",
    "right_unfold",
    "mode_unfold_classical",
    "mode_unfold_shifted",
    "fold_mode_classical",
    "MAX_DENSE_ELEMENTS",
    "MAX_RANK_ONE_TERMS",
]

# An order-3 core is a plain float64 ndarray of shape (r_left, n, r_right).
TRCore = np.ndarray

MAX_DENSE_ELEMENTS = 2**26
MAX_RANK_ONE_TERMS = 2**16


def _merge_cores(cores: list[np.ndarray]) -> np.ndarray:
    """Left-to-right product chain of cores, merging mode indices.

    Result has shape (r_first, prod of merged mode sizes, r_after_last)
    and its slice at a merged index is the ordered product of the member
    slices.  Merged indices are linearized first-index-fastest, matching
    the dense layout.
    """
    acc = cores[0]
    for z in cores[1:]:
        r0, m, _ = acc.shape
        _, n, b = z.shape
        acc = np.tensordot(acc, z, axes=([2], [0]))
        acc = acc.reshape((r0, m * n, b), order="F")
    return acc


class TRTensor:
    """Immutable chain of order-3 cores closed by a trace.

    Parameters
    ----------
    cores : sequence of array_like
        One order-3 array per mode, bond sizes matching circularly.
    """

    __slots__ = ("cores",)

    def __init__(self, cores, copy: bool = True):
        cores = [np.array(c, dtype=np.float64, copy=copy) for c in cores]
        if len(cores) == 0:
            raise ValueError("a tensor ring needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {k + 1} has ndim={c.ndim}, expected 3")
            if min(c.shape) < 1:
                raise ValueError(f"core {k + 1} has a zero dimension: {c.shape}")
        for k, c in enumerate(cores):
            nxt = cores[(k + 1) % len(cores)]
            if c.shape[2] != nxt.shape[0]:
                raise ValueError(
                    f"bond mismatch: core {k + 1} has right rank {c.shape[2]}, "
                    f"core {(k + 1) % len(cores) + 1} has left rank {nxt.shape[0]}"
                )
        for c in cores:
            c.setflags(write=False)
        object.__setattr__(self, "cores", tuple(cores))

    def __setattr__(self, name, value):
        raise AttributeError("TRTensor is immutable")

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        """Bond sizes (r_1, ..., r_d); r_k is the left rank of core k."""
        return tuple(c.shape[0] for c in self.cores)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def num_params(self) -> int:
        return sum(c.size for c in self.cores)

    def avg_rank(self) -> float:
        return float(np.mean(self.ranks))

    def max_rank(self) -> int:
        return max(self.ranks)

    def element(self, mi) -> float:
        """Entry at the 1-based multi-index ``mi``."""
        mi = tuple(int(i) for i in mi)
        if len(mi) != self.order:
            raise ValueError(f"multi-index has {len(mi)} components, tensor has {self.order}")
        for i, n in zip(mi, self.shape):
            if not 1 <= i <= n:
                raise IndexError(f"index component {i} outside [1, {n}]")
        acc = self.cores[0][:, mi[0] - 1, :]
        for k in range(1, self.order):
            acc = acc @ self.cores[k][:, mi[k] - 1, :]
        return float(np.trace(acc))

    def _canonical_head(self) -> int:
        """Rotation-equivariant starting core for dense contraction."""
        d = self.order
        if d == 1:
            return 0
        keys = [(c.shape, c.tobytes()) for c in self.cores]
        best = 0
        for s in range(1, d):
            for j in range(d):
                a, b = keys[(s + j) % d], keys[(best + j) % d]
                if a < b:
                    best = s
                    break
                if a > b:
                    break
        return best

    def to_dense(self) -> DenseTensor:
        """Materialize the full tensor.

        Contraction runs left-to-right from the canonical head, so the
        dense data of a ring and of any of its mode rotations are
        related by a pure index permutation, bit for bit.
        """
        if self.size > MAX_DENSE_ELEMENTS:
            raise CapacityError(
                f"dense tensor would hold {self.size} elements, budget is {MAX_DENSE_ELEMENTS}"
            )
        head = self._canonical_head()
        chain = _merge_cores([self.cores[(head + j) % self.order] for j in range(self.order)])
        vec = np.einsum("imi->m", chain)
        dims = self.shape
        rotated = DenseTensor(dims[head:] + dims[:head], vec, copy=False)
        return circular_shift_dims(rotated, (self.order - head) % self.order)

    def subchain(self, start: int, length: int) -> np.ndarray:
        """Merged core covering ``length`` modes starting at mode ``start``.

        ``start`` is 1-based; the chain wraps circularly.  The result
        has shape (r_start, prod of covered mode sizes, r_end) and its
        slices are ordered products of the member slices.
        """
        d = self.order
        if not 1 <= start <= d:
            raise ValueError(f"start must satisfy 1 <= start <= {d}, got {start}")
        if not 1 <= length <= d:
            raise ValueError(f"length must satisfy 1 <= length <= {d}, got {length}")
        picked = [self.cores[(start - 1 + j) % d] for j in range(length)]
        return _merge_cores(picked)

    def circular_shift(self, k: int) -> "TRTensor":
        """Ring representing the tensor with modes rotated left by ``k``."""
        d = self.order
        k = int(k)
        if not 0 <= k < d:
            raise ValueError(f"shift must satisfy 0 <= k < {d}, got {k}")
        if k == 0:
            return self
        return TRTensor(self.cores[k:] + self.cores[:k], copy=False)

    def rank_one_terms(self) -> list[tuple[np.ndarray, ...]]:
        """Rank-1 components, one per bond multi-index (a_1, ..., a_d).

        Each term is the tuple of mode fibers
        ``(Z_1[a_1, :, a_2], Z_2[a_2, :, a_3], ..., Z_d[a_d, :, a_1])``;
        the tensor is the sum of their outer products.
        """
        n_terms = math.prod(self.ranks)
        if n_terms > MAX_RANK_ONE_TERMS:
            raise CapacityError(f"{n_terms} rank-1 terms exceed the budget of {MAX_RANK_ONE_TERMS}")
        d = self.order
        terms = []
        for alphas in np.ndindex(*self.ranks):
            fibers = tuple(
                self.cores[k][alphas[k], :, alphas[(k + 1) % d]].copy() for k in range(d)
            )
            terms.append(fibers)
        return terms

    def __repr__(self):
        return f"TRTensor(shape={self.shape}, ranks={self.ranks})"


def left_unfold(core: np.ndarray) -> np.ndarray:
    """(r n) x r' matrix; rows pair (bond, mode) with the bond index fastest."""
    r, n, r2 = core.shape
    return core.reshape((r * n, r2), order="F")


def right_unfold(core: np.ndarray) -> np.ndarray:
    """r x (n r') matrix; columns pair (mode, bond) with the mode index fastest."""
    r, n, r2 = core.shape
    return core.reshape((r, n * r2), order="F")


def mode_unfold_classical(core: np.ndarray) -> np.ndarray:
    """n x (r r') matrix; columns pair the bonds with the left bond fastest."""
    r, n, r2 = core.shape
    return np.transpose(core, (1, 0, 2)).reshape((n, r * r2), order="F")


def mode_unfold_shifted(core: np.ndarray) -> np.ndarray:
    """n x (r' r) matrix; columns pair the bonds with the right bond fastest."""
    r, n, r2 = core.shape
    return np.transpose(core, (1, 2, 0)).reshape((n, r2 * r), order="F")


def fold_mode_classical(mat: np.ndarray, left_rank: int, right_rank: int) -> np.ndarray:
    """Inverse of mode_unfold_classical: matrix back to an (r, n, r') core."""
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[0]
    if mat.shape[1] != left_rank * right_rank:
        raise ValueError(
            f"matrix has {mat.shape[1]} columns, expected {left_rank} * {right_rank}"
        )
    return np.transpose(mat.reshape((n, left_rank, right_rank), order="F"), (1, 0, 2))
