"""Exact conversions between CP, Tucker, TT and the ring format.

Each converter rebuilds the same tensor structurally, without fitting:
CP factor rows become diagonal core slices, Tucker factors multiply
into the mode-2 fibers of the core's ring form, TT boundary matrices
gain singleton bond dims.  ``tr_to_tt_sum`` goes the other way,
splitting a ring into wrap-bond many TT terms that share the interior
cores.
"""

from __future__ import annotations

import numpy as np

from .decompose import tr_svd
from .dense import DenseTensor
from .ring import TRTensor

__all__ = [
    "CPRepr",
    "TuckerRepr",
    "TTRepr",
    "cp_to_tr",
    "tucker_to_tr",
    "tucker_from_dense",
    "tt_to_tr",
    "tr_to_tt_sum",
]


def _as_matrix(arr, what: str) -> np.ndarray:
    mat = np.asarray(arr, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"{what} must be a matrix, got {mat.ndim} dims")
    return mat


class CPRepr:
    """Sum of rank-one terms: d factor matrices sharing a column count.

    Column alpha of every factor together forms one rank-one term; any
    term weights are assumed absorbed into the last factor.
    """

    __slots__ = ("factors",)

    def __init__(self, factors):
        mats = tuple(_as_matrix(f, "CP factor") for f in factors)
        if len(mats) < 2:
            raise ValueError("need at least two factor matrices")
        r = mats[0].shape[1]
        if any(f.shape[1] != r for f in mats):
            counts = tuple(f.shape[1] for f in mats)
            raise ValueError(f"factors must share a column count, got {counts}")
        if r < 1:
            raise ValueError("factors need at least one column")
        self.factors = mats

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def shape(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def __repr__(self) -> str:
        return f"CPRepr(shape={self.shape}, rank={self.rank})"


class TuckerRepr:
    """Core-times-factors form with the core already in ring format."""

    __slots__ = ("core_tr", "factors")

    def __init__(self, core_tr, factors):
        if not isinstance(core_tr, TRTensor):
            raise ValueError("core_tr must be a TRTensor")
        mats = tuple(_as_matrix(f, "Tucker factor") for f in factors)
        if len(mats) != core_tr.order:
            raise ValueError(
                f"got {len(mats)} factors for a core of order {core_tr.order}"
            )
        for k, (f, m) in enumerate(zip(mats, core_tr.shape), start=1):
            if f.shape[1] != m:
                raise ValueError(
                    f"factor {k} has {f.shape[1]} columns, core mode {k} has size {m}"
                )
        self.core_tr = core_tr
        self.factors = mats

    @property
    def shape(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def __repr__(self) -> str:
        return f"TuckerRepr(shape={self.shape}, core_shape={self.core_tr.shape})"


class TTRepr:
    """Chain format: boundary matrices, 3rd-order cores in between."""

    __slots__ = ("first", "interior", "last")

    def __init__(self, first, interior, last):
        first = _as_matrix(first, "first TT core")
        last = _as_matrix(last, "last TT core")
        mids = tuple(np.asarray(c, dtype=np.float64) for c in interior)
        if any(c.ndim != 3 for c in mids):
            raise ValueError("interior TT cores must be 3rd-order")
        bond = first.shape[1]
        for j, c in enumerate(mids, start=2):
            if c.shape[0] != bond:
                raise ValueError(
                    f"core {j} expects left bond {c.shape[0]}, previous bond is {bond}"
                )
            bond = c.shape[2]
        if last.shape[0] != bond:
            raise ValueError(
                f"last core expects left bond {last.shape[0]}, previous bond is {bond}"
            )
        self.first = first
        self.interior = mids
        self.last = last

    @property
    def shape(self) -> tuple:
        return (self.first.shape[0],) + tuple(c.shape[1] for c in self.interior) + (
            self.last.shape[1],
        )

    def __repr__(self) -> str:
        return f"TTRepr(shape={self.shape})"


def cp_to_tr(cp: CPRepr) -> TRTensor:
    """Embed a CP representation: core slices are diagonals of factor rows."""
    r = cp.rank
    cores = []
    for factor in cp.factors:
        core = np.zeros((r, factor.shape[0], r))
        core[np.arange(r), :, np.arange(r)] = factor.T
        cores.append(core)
    return TRTensor(cores, copy=False)


def tucker_to_tr(tk: TuckerRepr) -> TRTensor:
    """Multiply each factor into the matching core of the ring-form core."""
    cores = [
        np.einsum("avb,nv->anb", core, factor)
        for core, factor in zip(tk.core_tr.cores, tk.factors)
    ]
    return TRTensor(cores, copy=False)


def tucker_from_dense(core, factors) -> TuckerRepr:
    """Wrap a dense core tensor, converting it to ring form near-exactly."""
    core = np.asarray(core, dtype=np.float64)
    dense = DenseTensor(core.shape, core.ravel(order="F"))
    core_tr, _ = tr_svd(dense, 1e-12)
    return TuckerRepr(core_tr, factors)


def tt_to_tr(tt: TTRepr) -> TRTensor:
    """Give the boundary matrices their singleton bond dims."""
    cores = [tt.first[np.newaxis, :, :]]
    cores.extend(tt.interior)
    cores.append(tt.last[:, :, np.newaxis])
    return TRTensor(cores)


def tr_to_tt_sum(tr: TRTensor) -> list[TTRepr]:
    """Split a ring into wrap-bond many chain terms.

    Term alpha keeps row alpha of the first core's slices and column
    alpha of the last core's slices; all terms share the interior cores,
    and their dense forms sum to the ring's dense form.
    """
    if tr.order < 2:
        raise ValueError("need at least two cores")
    first, last = tr.cores[0], tr.cores[-1]
    interior = tuple(tr.cores[1:-1])
    return [
        TTRepr(first[alpha], interior, last[:, :, alpha])
        for alpha in range(first.shape[0])
    ]
