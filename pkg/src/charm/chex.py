"""CHEX sidecar format: stacks of float32 maps with a tiny binary header.

Layout: magic ``CHEX``, then count, height, width as little-endian uint32,
then count*height*width little-endian float32 values, row-major. Used for
per-token heatmaps (count = token count) and for embedding matrices
(height = 1, width = vector dim).
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptSession

MAGIC = b"CHEX"
_HEADER = struct.Struct("<4sIII")


def write_chex(maps: np.ndarray) -> bytes:
    """Serialize a (count, h, w) array; empty stacks are legal."""
    arr = np.ascontiguousarray(maps, dtype="<f4")
    if arr.ndim != 3:
        raise ValueError(f"expected (count, h, w) maps, got shape {arr.shape}")
    count, h, w = arr.shape
    return _HEADER.pack(MAGIC, count, h, w) + arr.tobytes()


def read_chex(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise CorruptSession("CHEX payload shorter than its header")
    magic, count, h, w = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptSession(f"bad CHEX magic {magic!r}")
    body = data[_HEADER.size:]
    expected = count * h * w * 4
    if len(body) != expected:
        raise CorruptSession(f"CHEX body is {len(body)} bytes, expected {expected}")
    return np.frombuffer(body, dtype="<f4").reshape(count, h, w).astype(np.float32)
