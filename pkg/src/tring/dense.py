"""Dense d-dimensional tensors with a fixed first-index-fastest layout.

Multi-indices in the public API are 1-based, matching the usual
mathematical convention for tensor modes; flat offsets are 0-based.
The linear offset of ``(i_1, ..., i_d)`` in a tensor with mode sizes
``(n_1, ..., n_d)`` is::

    (i_1 - 1) + (i_2 - 1) n_1 + (i_3 - 1) n_1 n_2 + ...

so the first index varies fastest (column-major order).  Every reshape
in this module therefore uses ``order="F"``, which makes the matrix
views below literal reinterpretations of the flat buffer.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Shape",
    "MultiIndex",
    "DenseTensor",
    "linearize",
    "tensorize",
    "permute",
    "circular_shift_dims",
    "k_unfolding",
    "mode_k_unfolding",
    "fold",
    "relative_error",
]

# Mode sizes (n_1, ..., n_d), all >= 1.
Shape = tuple[int, ...]
# 1-based index with one entry per mode.
MultiIndex = tuple[int, ...]

UNFOLD_KINDS = ("k-unfold", "mode-k-shifted", "mode-k-classical")


def validate_shape(dims) -> Shape:
    """Return ``dims`` as a tuple after checking it is a valid shape."""
    dims = tuple(int(n) for n in dims)
    if len(dims) == 0:
        raise ValueError("shape needs at least one mode")
    if any(n < 1 for n in dims):
        raise ValueError(f"mode sizes must be >= 1, got {dims}")
    return dims


class DenseTensor:
    """Immutable dense tensor of 64-bit floats.

    Parameters
    ----------
    dims : sequence of int
        Mode sizes (n_1, ..., n_d).
    data : array_like
        Flat buffer of ``prod(dims)`` values, linearized
        first-index-fastest.

    The flat buffer is copied and marked read-only, so instances can be
    shared freely.
    """

    __slots__ = ("shape", "data")

    def __init__(self, dims, data, copy: bool = True):
        shape = validate_shape(dims)
        arr = np.array(data, dtype=np.float64, copy=copy).reshape(-1)
        if arr.size != math.prod(shape):
            raise ValueError(
                f"buffer holds {arr.size} values, shape {shape} needs {math.prod(shape)}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DenseTensor is immutable")

    @classmethod
    def from_array(cls, arr) -> "DenseTensor":
        """Build from a d-dimensional array, raveling first-index-fastest."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 0:
            raise ValueError("scalar input has no modes")
        return cls(arr.shape, arr.ravel(order="F"), copy=False)

    @property
    def order(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return self.data.size

    def as_array(self) -> np.ndarray:
        """Read-only d-dimensional view of the flat buffer."""
        return self.data.reshape(self.shape, order="F")

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def element(self, mi: MultiIndex) -> float:
        return float(self.data[linearize(self.shape, mi)])

    def __repr__(self):
        return f"DenseTensor(shape={self.shape})"


def linearize(dims, mi) -> int:
    """Flat 0-based offset of the 1-based multi-index ``mi``.

    Raises IndexError when a component is out of range and ValueError
    when the number of components does not match the shape.
    """
    dims = validate_shape(dims)
    mi = tuple(int(i) for i in mi)
    if len(mi) != len(dims):
        raise ValueError(f"multi-index has {len(mi)} components, shape has {len(dims)}")
    for i, n in zip(mi, dims):
        if not 1 <= i <= n:
            raise IndexError(f"index component {i} outside [1, {n}]")
    zero_based = tuple(i - 1 for i in mi)
    return int(np.ravel_multi_index(zero_based, dims, order="F"))


def tensorize(vec, dims) -> DenseTensor:
    """Reinterpret a flat vector as a tensor; the buffer is taken verbatim."""
    return DenseTensor(dims, vec)


def permute(t: DenseTensor, perm) -> DenseTensor:
    """Reorder modes.

    ``perm`` is a permutation of 1..d; mode j of the result is mode
    ``perm[j]`` of the input, so entry (j_1, ..., j_d) of the result is
    the input entry whose index at position perm[j] equals j_j.
    """
    perm = tuple(int(p) for p in perm)
    d = t.order
    if sorted(perm) != list(range(1, d + 1)):
        raise ValueError(f"perm must be a permutation of 1..{d}, got {perm}")
    arr = np.transpose(t.as_array(), axes=[p - 1 for p in perm])
    return DenseTensor(arr.shape, arr.ravel(order="F"), copy=False)


def circular_shift_dims(t: DenseTensor, k: int) -> DenseTensor:
    """Rotate modes left by ``k``: result shape (n_{k+1}, ..., n_d, n_1, ..., n_k)."""
    d = t.order
    k = int(k)
    if not 0 <= k < d:
        raise ValueError(f"shift must satisfy 0 <= k < {d}, got {k}")
    if k == 0:
        return t
    return permute(t, tuple(range(k + 1, d + 1)) + tuple(range(1, k + 1)))


def k_unfolding(t: DenseTensor, k: int) -> np.ndarray:
    """Matrix grouping the first ``k`` indices as rows, the rest as columns.

    Row order is the first-index-fastest linearization of (i_1..i_k),
    column order that of (i_{k+1}..i_d); the matrix is a pure reshape of
    the flat buffer.
    """
    d = t.order
    k = int(k)
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must satisfy 1 <= k <= {d - 1}, got {k}")
    rows = math.prod(t.shape[:k])
    return t.data.reshape((rows, t.size // rows), order="F")


def mode_k_unfolding(t: DenseTensor, k: int, variant: str = "shifted") -> np.ndarray:
    """Matrix with mode-k fibers as rows.

    variant "shifted": columns ordered (i_{k+1}, ..., i_d, i_1, ..., i_{k-1}),
    the natural order for circular subchains.  variant "classical":
    columns ordered (i_1, ..., i_{k-1}, i_{k+1}, ..., i_d).
    """
    d = t.order
    k = int(k)
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    if variant == "shifted":
        axes = list(range(k - 1, d)) + list(range(0, k - 1))
        arr = np.transpose(t.as_array(), axes)
    elif variant == "classical":
        arr = np.moveaxis(t.as_array(), k - 1, 0)
    else:
        raise ValueError(f"variant must be 'shifted' or 'classical', got {variant!r}")
    n_k = t.shape[k - 1]
    return arr.reshape((n_k, t.size // n_k), order="F")


def fold(mat, dims, k: int, kind: str) -> DenseTensor:
    """Inverse of the unfoldings; ``kind`` is one of UNFOLD_KINDS."""
    dims = validate_shape(dims)
    d = len(dims)
    k = int(k)
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("fold expects a matrix")
    size = math.prod(dims)
    if mat.size != size:
        raise ValueError(f"matrix holds {mat.size} values, shape {dims} needs {size}")
    if kind == "k-unfold":
        if not 1 <= k <= d - 1:
            raise ValueError(f"k must satisfy 1 <= k <= {d - 1}, got {k}")
        if mat.shape[0] != math.prod(dims[:k]):
            raise ValueError("matrix rows do not match the first k mode sizes")
        return DenseTensor(dims, mat.ravel(order="F"), copy=False)
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    if mat.shape[0] != dims[k - 1]:
        raise ValueError(f"matrix has {mat.shape[0]} rows, mode {k} has size {dims[k - 1]}")
    if kind == "mode-k-shifted":
        rotated = dims[k - 1:] + dims[: k - 1]
        shifted = DenseTensor(rotated, mat.ravel(order="F"), copy=False)
        return circular_shift_dims(shifted, (d - (k - 1)) % d)
    if kind == "mode-k-classical":
        moved = dims[k - 1:k] + dims[: k - 1] + dims[k:]
        arr = mat.reshape(moved, order="F")
        arr = np.moveaxis(arr, 0, k - 1)
        return DenseTensor(dims, arr.ravel(order="F"), copy=False)
    raise ValueError(f"kind must be one of {UNFOLD_KINDS}, got {kind!r}")


def relative_error(t: DenseTensor, approx: DenseTensor) -> float:
    """Frobenius-relative error ||t - approx|| / ||t||."""
    if t.shape != approx.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {approx.shape}")
    ref = t.norm()
    if ref == 0.0:
        raise ValueError("reference tensor has zero norm")
    return float(np.linalg.norm(t.data - approx.data)) / ref
