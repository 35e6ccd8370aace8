"""Matrix kernels shared by the fitting algorithms.

Thin, contract-pinning wrappers around LAPACK via numpy: a truncated
SVD with an absolute Frobenius tail threshold, a pseudoinverse-based
least squares solve for the core update subproblems, and the balanced
integer factor split used to open a closed chain after the first SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["TruncatedSVDResult", "truncated_svd", "least_squares_rhs", "balanced_factor_pair"]

# Singular values below this multiple of the largest are treated as zero
# when forming a pseudoinverse.
PINV_CUTOFF = 1e-12


@dataclass(frozen=True)
class TruncatedSVDResult:
    """Rank-``rank`` factors with ``residual_fro`` = norm of the discarded tail."""

    U: np.ndarray  # m x rank, orthonormal columns
    S: np.ndarray  # rank, non-increasing, > 0 unless the input is zero
    V: np.ndarray  # n x rank, orthonormal columns
    rank: int
    residual_fro: float


def truncated_svd(a, delta: float, max_rank: int | None = None) -> TruncatedSVDResult:
    """Smallest-rank SVD truncation whose discarded tail has norm <= ``delta``.

    Parameters
    ----------
    a : array_like, 2-D with finite entries
    delta : float
        Non-negative absolute threshold on the Frobenius norm of the
        discarded part.
    max_rank : int, optional
        Hard cap on the retained rank; when it binds, the residual grows
        beyond ``delta`` accordingly.

    The retained rank is always at least 1, so ``delta >= ||a||_F``
    keeps the dominant singular triple.  Each retained left singular
    vector is oriented so its largest-magnitude entry is non-negative,
    which makes the output deterministic across builds that flip signs.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"matrix must be non-empty, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise FloatingPointError("matrix has non-finite entries")
    delta = float(delta)
    if not (delta >= 0.0):
        raise ValueError(f"delta must be non-negative, got {delta}")

    u, s, vt = np.linalg.svd(a, full_matrices=False)

    # tails[r] = sqrt(sum of squares of singular values after the first r)
    tails = np.sqrt(np.cumsum(s[::-1] ** 2)[::-1])
    tails = np.append(tails[1:], 0.0)
    rank = int(np.argmax(tails <= delta)) + 1
    if max_rank is not None:
        if max_rank < 1:
            raise ValueError(f"max_rank must be >= 1, got {max_rank}")
        rank = min(rank, int(max_rank))

    u = u[:, :rank].copy()
    vt = vt[:rank].copy()
    for j in range(rank):
        lead = np.argmax(np.abs(u[:, j]))
        if u[lead, j] < 0.0:
            u[:, j] = -u[:, j]
            vt[j] = -vt[j]

    residual = float(np.sqrt(np.sum(s[rank:] ** 2)))
    return TruncatedSVDResult(U=u, S=s[:rank].copy(), V=vt.T.copy(), rank=rank, residual_fro=residual)


def least_squares_rhs(t_unf, b) -> np.ndarray:
    """Minimizer X of ``||t_unf - X b^T||_F``.

    Computed as ``(t_unf b)(b^T b)^+`` through an eigendecomposition of
    the small Gram matrix; the tall orthogonal factor of ``b`` is never
    materialized. Gram eigenvalues below PINV_CUTOFF**2 times the largest
    are treated as zero (the same directions an SVD of ``b`` would drop
    at PINV_CUTOFF), so rank-deficient design matrices yield the
    minimum-norm solution instead of blowing up.
    """
    t_unf = np.asarray(t_unf, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if t_unf.ndim != 2 or b.ndim != 2:
        raise ValueError("least_squares_rhs expects matrices")
    if t_unf.shape[1] != b.shape[0]:
        raise ValueError(
            f"inner dimensions differ: t_unf has {t_unf.shape[1]} columns, b has {b.shape[0]} rows"
        )
    gram = b.T @ b
    w, v = np.linalg.eigh(gram)
    if w.size == 0 or w[-1] <= 0.0:
        return np.zeros((t_unf.shape[0], b.shape[1]))
    keep = w > (PINV_CUTOFF**2) * w[-1]
    v = v[:, keep]
    return (t_unf @ b) @ (v / w[keep]) @ v.T


def balanced_factor_pair(r: int) -> tuple[int, int]:
    """Factor ``r`` as r1 * r2 with r1 <= r2 and r2 - r1 minimal.

    Primes give (1, r); the spread between the two bond ranks opened by
    the first split is what this keeps small.
    """
    r = int(r)
    if r < 1:
        raise ValueError(f"r must be a positive integer, got {r}")
    for r1 in range(math.isqrt(r), 0, -1):
        if r % r1 == 0:
            return (r1, r // r1)
    raise AssertionError("unreachable")
