"""Arithmetic directly in the ring format.

Sums concatenate bond spaces block-diagonally, elementwise products
take slice-wise Kronecker products, and inner products contract a pair
of rings without ever materializing the product ring's cores: the
per-mode transfer matrices are built slice by slice and chained.
"""

from __future__ import annotations

import math

import numpy as np

from .ring import TRTensor

__all__ = ["add", "hadamard", "multilinear_vec_product", "inner_product", "fro_norm"]


def _check_same_shape(a: TRTensor, b: TRTensor):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def add(a: TRTensor, b: TRTensor) -> TRTensor:
    """Ring representing a + b; bond sizes add."""
    _check_same_shape(a, b)
    d = a.order
    cores = []
    for k in range(d):
        za, zb = a.cores[k], b.cores[k]
        ra, n, ra2 = za.shape
        rb, _, rb2 = zb.shape
        c = np.zeros((ra + rb, n, ra2 + rb2))
        c[:ra, :, :ra2] = za
        c[ra:, :, ra2:] = zb
        cores.append(c)
    return TRTensor(cores, copy=False)


def hadamard(a: TRTensor, b: TRTensor) -> TRTensor:
    """Ring representing the elementwise product; bond sizes multiply."""
    _check_same_shape(a, b)
    cores = []
    for za, zb in zip(a.cores, b.cores):
        ra, n, ra2 = za.shape
        rb, _, rb2 = zb.shape
        # slice-wise Kronecker product, first ring's bond index major
        c = np.einsum("anb,cnd->acnbd", za, zb).reshape((ra * rb, n, ra2 * rb2))
        cores.append(c)
    return TRTensor(cores, copy=False)


def multilinear_vec_product(tr: TRTensor, vectors) -> float:
    """Contract every mode with a vector: sum_i t(i) u_1(i_1) ... u_d(i_d)."""
    vectors = [np.asarray(u, dtype=np.float64).reshape(-1) for u in vectors]
    if len(vectors) != tr.order:
        raise ValueError(f"got {len(vectors)} vectors for {tr.order} modes")
    for k, (u, n) in enumerate(zip(vectors, tr.shape)):
        if u.size != n:
            raise ValueError(f"vector {k + 1} has length {u.size}, mode size is {n}")
    acc = np.einsum("anb,n->ab", tr.cores[0], vectors[0])
    for core, u in zip(tr.cores[1:], vectors[1:]):
        acc = acc @ np.einsum("anb,n->ab", core, u)
    return float(np.trace(acc))


def inner_product(a: TRTensor, b: TRTensor) -> float:
    """Frobenius inner product <a, b>.

    Equivalent to contracting hadamard(a, b) with all-ones vectors, but
    the Kronecker transfer matrix of each mode is formed on the fly and
    chained immediately, so the product ring is never stored.
    """
    _check_same_shape(a, b)
    acc = None
    for za, zb in zip(a.cores, b.cores):
        ra, _, ra2 = za.shape
        rb, _, rb2 = zb.shape
        step = np.einsum("anb,cnd->acbd", za, zb).reshape((ra * rb, ra2 * rb2))
        acc = step if acc is None else acc @ step
    return float(np.trace(acc))


def fro_norm(tr: TRTensor) -> float:
    """Frobenius norm; the tiny negative dust from cancellation is clamped."""
    return math.sqrt(max(inner_product(tr, tr), 0.0))
