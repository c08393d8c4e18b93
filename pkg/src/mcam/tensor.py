"""Dense 3-order tensors: validation, mode slicing and file I/O.

A tensor is a plain C-ordered ``float64`` :class:`numpy.ndarray` with three
axes, so cell ``(i1, i2, i3)`` lives at flat offset ``i1*m2*m3 + i2*m3 + i3``.
Modes are numbered 1, 2, 3 throughout the package.

Binary layout (``T3B1``)::

    b"T3B1" | m1 m2 m3 as <u8 | m1*m2*m3 values as <f8

Text layout: a header line ``m1,m2,m3`` followed by ``i1,i2,i3,value`` rows.
Cells not listed are zero.
"""
import csv
import os
import struct

import numpy as np

from .errors import BoundsError, ContractError, FormatError

MAGIC = b"T3B1"
_HEADER = struct.Struct("<4s3Q")

MODES = (1, 2, 3)


def as_tensor(data, copy=False):
    """Validate ``data`` as a finite 3-order float64 tensor.

    The returned array is C-contiguous and flagged read-only.
    """
    t = np.array(data, dtype=np.float64, order="C", copy=True if copy else None)
    if t.ndim != 3:
        raise ContractError(f"expected a 3-order tensor, got {t.ndim} axes")
    if min(t.shape) < 1:
        raise ContractError(f"all dimensions must be positive, got {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ContractError("tensor contains NaN or Inf entries")
    t = t.view()
    t.flags.writeable = False
    return t


def check_mode(mode):
    if mode not in MODES:
        raise ContractError(f"mode must be one of 1, 2, 3; got {mode!r}")
    return mode


def mode_slice(t, mode, index):
    """Return slice ``index`` of ``mode`` as a 2-D array.

    Rows follow the lower remaining mode, columns the higher one: a mode-1
    slice is m2 x m3, mode-2 is m1 x m3 and mode-3 is m1 x m2.
    """
    check_mode(mode)
    size = t.shape[mode - 1]
    if not 0 <= index < size:
        raise BoundsError(mode, index, size)
    return np.take(t, index, axis=mode - 1)


def mode_slices(t, mode):
    """All slices of ``mode`` stacked along a new leading axis."""
    check_mode(mode)
    return np.moveaxis(t, mode - 1, 0)


def from_slices(slices, mode):
    """Inverse of :func:`mode_slices`."""
    check_mode(mode)
    return np.ascontiguousarray(np.moveaxis(np.asarray(slices), 0, mode - 1))


def save_tensor(t, path):
    t = as_tensor(t)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, *t.shape))
        fh.write(t.astype("<f8", copy=False).tobytes(order="C"))


def load_tensor(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError("truncated header", offset=len(raw))
    magic, m1, m2, m3 = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if min(m1, m2, m3) < 1:
        raise FormatError(f"non-positive dimension in {(m1, m2, m3)}", offset=4)
    count = m1 * m2 * m3
    payload = len(raw) - _HEADER.size
    if payload != 8 * count:
        kind = "truncated payload" if payload < 8 * count else "trailing bytes after payload"
        raise FormatError(
            f"{kind}: dims {m1}x{m2}x{m3} need {8 * count} bytes, found {payload}",
            offset=_HEADER.size + min(payload, 8 * count),
        )
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FormatError("non-finite value", offset=_HEADER.size + 8 * int(bad[0]))
    return as_tensor(values.astype(np.float64).reshape(m1, m2, m3))


def load_tensor_csv(path):
    """Read the sparse text layout (header ``m1,m2,m3``, then index rows)."""
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise FormatError("empty file", offset=0) from None
        try:
            dims = tuple(int(v) for v in header)
        except ValueError:
            raise FormatError(f"bad header {header!r}", offset=0) from None
        if len(dims) != 3 or min(dims) < 1:
            raise FormatError(f"header must hold three positive dims, got {header!r}", offset=0)
        t = np.zeros(dims)
        for lineno, row in enumerate(rows, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 4:
                raise FormatError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                idx = tuple(int(v) for v in row[:3])
                value = float(row[3])
            except ValueError:
                raise FormatError(f"line {lineno}: unparsable row {row!r}") from None
            if any(not 0 <= i < m for i, m in zip(idx, dims)):
                raise FormatError(f"line {lineno}: index {idx} outside {dims}")
            t[idx] = value
    try:
        return as_tensor(t)
    except ContractError as exc:
        raise FormatError(str(exc)) from None


def read_tensor(path):
    """Load a tensor by extension: ``.csv`` as text, anything else as T3B1."""
    if os.fspath(path).lower().endswith(".csv"):
        return load_tensor_csv(path)
    return load_tensor(path)
