"""Binary file formats and the JSON model descriptor.

Two sibling formats, both little-endian with an ASCII magic prefix:

* ``TRT1`` holds one dense tensor: magic, u32 order d, d u64 mode
  sizes, then the values as f64 in first-index-fastest order.
* ``TRC1`` holds ring cores: magic, u32 core count d, then per core
  three u64 sizes (left bond, mode, right bond) followed by the core
  values as f64, first-index-fastest.  Adjacent bonds must agree
  around the ring.

Writes go through a temp file in the target directory plus an atomic
rename, so a killed process never leaves a half-written file that
parses as valid.  Malformed input raises FormatError naming the
violated invariant.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile

import numpy as np

from .convert import CPRepr, TTRepr, TuckerRepr, tucker_from_dense
from .dense import DenseTensor
from .errors import FormatError
from .ring import TRTensor

__all__ = [
    "TRT1_MAGIC",
    "TRC1_MAGIC",
    "write_dense",
    "read_dense",
    "write_ring",
    "read_ring",
    "load_model_descriptor",
]

TRT1_MAGIC = b"TRT1"
TRC1_MAGIC = b"TRC1"


def _atomic_write(path, payload: bytes) -> None:
    target = os.fspath(path)
    directory = os.path.dirname(target) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tring-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_exact(fh, count: int, what: str) -> bytes:
    # cheap truncation check before read() allocates a buffer of size count;
    # sizes parsed from a corrupt header can be absurd
    here = fh.tell()
    end = fh.seek(0, os.SEEK_END)
    fh.seek(here)
    if end - here < count:
        raise FormatError(f"truncated file: expected {count} bytes of {what}")
    data = fh.read(count)
    if len(data) != count:
        raise FormatError(f"truncated file: expected {count} bytes of {what}")
    return data


def write_dense(path, t: DenseTensor) -> None:
    """Serialize a dense tensor as TRT1."""
    parts = [
        struct.pack("<4sI", TRT1_MAGIC, t.order),
        np.asarray(t.shape, dtype="<u8").tobytes(),
        np.ascontiguousarray(t.data, dtype="<f8").tobytes(),
    ]
    _atomic_write(path, b"".join(parts))


def read_dense(path) -> DenseTensor:
    """Parse a TRT1 file."""
    with open(path, "rb") as fh:
        magic, order = struct.unpack("<4sI", _read_exact(fh, 8, "TRT1 header"))
        if magic != TRT1_MAGIC:
            raise FormatError(f"bad magic {magic!r}: not a TRT1 file")
        if order < 1:
            raise FormatError("TRT1 order must be at least 1")
        dims = np.frombuffer(_read_exact(fh, 8 * order, "TRT1 mode sizes"), dtype="<u8")
        if any(n < 1 for n in dims):
            raise FormatError(f"TRT1 mode sizes must be positive, got {tuple(dims)}")
        count = math.prod(int(n) for n in dims)
        data = np.frombuffer(_read_exact(fh, 8 * count, "TRT1 values"), dtype="<f8")
        if fh.read(1):
            raise FormatError("trailing bytes after TRT1 payload")
    return DenseTensor(tuple(int(n) for n in dims), data)


def write_ring(path, tr: TRTensor) -> None:
    """Serialize ring cores as TRC1."""
    parts = [struct.pack("<4sI", TRC1_MAGIC, tr.order)]
    for core in tr.cores:
        parts.append(np.asarray(core.shape, dtype="<u8").tobytes())
        parts.append(np.asarray(core.ravel(order="F"), dtype="<f8").tobytes())
    _atomic_write(path, b"".join(parts))


def read_ring(path) -> TRTensor:
    """Parse a TRC1 file, checking the wrap-around bond law."""
    with open(path, "rb") as fh:
        magic, order = struct.unpack("<4sI", _read_exact(fh, 8, "TRC1 header"))
        if magic != TRC1_MAGIC:
            raise FormatError(f"bad magic {magic!r}: not a TRC1 file")
        if order < 1:
            raise FormatError("TRC1 core count must be at least 1")
        cores = []
        for k in range(order):
            sizes = np.frombuffer(
                _read_exact(fh, 24, f"TRC1 core {k + 1} sizes"), dtype="<u8"
            )
            r_left, n, r_right = (int(v) for v in sizes)
            if min(r_left, n, r_right) < 1:
                raise FormatError(
                    f"TRC1 core {k + 1} sizes must be positive, got {(r_left, n, r_right)}"
                )
            count = r_left * n * r_right
            flat = np.frombuffer(
                _read_exact(fh, 8 * count, f"TRC1 core {k + 1} values"), dtype="<f8"
            )
            cores.append(flat.reshape((r_left, n, r_right), order="F"))
        if fh.read(1):
            raise FormatError("trailing bytes after TRC1 payload")
    for k, core in enumerate(cores):
        succ = cores[(k + 1) % order]
        if core.shape[2] != succ.shape[0]:
            raise FormatError(
                f"wrap-around bond mismatch: core {k + 1} has right bond "
                f"{core.shape[2]}, core {(k + 1) % order + 1} has left bond {succ.shape[0]}"
            )
    return TRTensor(cores)


def _descriptor_matrix(base_dir: str, ref: str, what: str) -> np.ndarray:
    t = read_dense(os.path.join(base_dir, ref))
    if t.order != 2:
        raise FormatError(f"{what} {ref!r} must be a matrix, got order {t.order}")
    return t.data.reshape(t.shape, order="F")


def load_model_descriptor(path):
    """Load a CP / Tucker / TT model from a JSON descriptor.

    The descriptor names TRT1 files (resolved relative to its own
    directory) and a ``kind``:

    * ``{"kind": "cp", "factors": [paths...]}`` — one matrix per mode.
    * ``{"kind": "tucker", "core": path, "factors": [paths...]}`` —
      dense core plus one matrix per mode.
    * ``{"kind": "tt", "cores": [paths...]}`` — first and last are
      matrices, the rest 3rd-order tensors.
    """
    target = os.fspath(path)
    base_dir = os.path.dirname(target) or "."
    try:
        with open(target, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"descriptor is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise FormatError("descriptor must be a JSON object")
    kind = spec.get("kind")
    if kind == "cp":
        refs = spec.get("factors")
        if not isinstance(refs, list) or not refs:
            raise FormatError('cp descriptor needs a non-empty "factors" list')
        return CPRepr([_descriptor_matrix(base_dir, r, "CP factor") for r in refs])
    if kind == "tucker":
        refs = spec.get("factors")
        core_ref = spec.get("core")
        if not isinstance(refs, list) or not refs or not isinstance(core_ref, str):
            raise FormatError('tucker descriptor needs "core" and a "factors" list')
        core = read_dense(os.path.join(base_dir, core_ref))
        factors = [_descriptor_matrix(base_dir, r, "Tucker factor") for r in refs]
        return tucker_from_dense(core.data.reshape(core.shape, order="F"), factors)
    if kind == "tt":
        refs = spec.get("cores")
        if not isinstance(refs, list) or len(refs) < 2:
            raise FormatError('tt descriptor needs a "cores" list of at least 2 paths')
        first = _descriptor_matrix(base_dir, refs[0], "first TT core")
        last = _descriptor_matrix(base_dir, refs[-1], "last TT core")
        interior = []
        for ref in refs[1:-1]:
            t = read_dense(os.path.join(base_dir, ref))
            if t.order != 3:
                raise FormatError(
                    f"interior TT core {ref!r} must be 3rd-order, got {t.order}"
                )
            interior.append(t.data.reshape(t.shape, order="F"))
        return TTRepr(first, interior, last)
    raise FormatError(f'descriptor "kind" must be cp, tucker or tt, got {kind!r}')
