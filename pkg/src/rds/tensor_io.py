"""RTN1 tensor files, JSON sidecars and 8-bit PGM previews.

RTN1 layout: ``b"RTN1" | u64 rank | u64 dims[rank] | f64 data`` (little-endian,
row-major). A sidecar ``<path>.json`` records shape, value-range convention
and free-form provenance.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

__all__ = ["save_tensor", "load_tensor", "save_pgm"]

MAGIC = b"RTN1"


def save_tensor(path, x, provenance=None, value_range=(-1.0, 1.0)) -> Path:
    path = Path(path)
    x = np.asarray(x, dtype="<f8")  # tobytes() below is row-major regardless of layout
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", x.ndim))
        fh.write(struct.pack(f"<{x.ndim}Q", *x.shape))
        fh.write(x.tobytes())
    sidecar = {"shape": list(x.shape), "range": list(value_range), "provenance": provenance or {}}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def load_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}", 0)
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header", len(data))
    (rank,) = struct.unpack_from("<Q", data, 4)
    end = 12 + 8 * rank
    if len(data) < end:
        raise FormatError(f"{path}: truncated dims for rank {rank}", len(data))
    dims = struct.unpack_from(f"<{rank}Q", data, 12)
    n = int(np.prod(dims, dtype=np.int64))
    if len(data) != end + 8 * n:
        raise FormatError(f"{path}: expected {8 * n} data bytes, found {len(data) - end}", min(len(data), end + 8 * n))
    return np.frombuffer(data, dtype="<f8", count=n, offset=end).astype(np.float64).reshape(dims)


def save_pgm(path, x) -> Path:
    """Binary 8-bit PGM of a 2-D signal, clamping ``[-1, 1]`` onto ``[0, 255]``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("PGM export needs a 2-D array")
    img = np.rint((np.clip(x, -1.0, 1.0) + 1.0) * 127.5).astype(np.uint8)
    path = Path(path)
    h, w = img.shape
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes())
    return path
