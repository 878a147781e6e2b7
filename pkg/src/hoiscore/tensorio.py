"""Flat binary tensor interchange format.

Layout (little-endian):
    magic   4 bytes  b"DYTF"
    version u16      currently 1
    dtype   u16      0 = float32
    rank    u32
    dims    rank * u32
    payload prod(dims) * 4 bytes, row-major float32

Round-trips are bit-exact.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import BadMagic, BadVersion, TruncatedPayload

MAGIC = b"DYTF"
VERSION = 1
DTYPE_F32 = 0


def header_size(rank: int) -> int:
    return 4 + 2 + 2 + 4 + 4 * rank


def write_tensor(matrix, path) -> None:
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HHI", VERSION, DTYPE_F32, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())
    os.replace(tmp, path)


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r}, found {raw[:4]!r}")
    if len(raw) < 12:
        raise TruncatedPayload(f"{path}: header truncated")
    version, dtype, rank = struct.unpack_from("<HHI", raw, 4)
    if version != VERSION:
        raise BadVersion(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F32:
        raise BadVersion(f"{path}: unsupported dtype code {dtype}")
    dims_end = 12 + 4 * rank
    if len(raw) < dims_end:
        raise TruncatedPayload(f"{path}: dims truncated")
    dims = struct.unpack_from(f"<{rank}I", raw, 12)
    expected = int(np.prod(dims, dtype=np.int64)) * 4
    payload = raw[dims_end:]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, dims {dims} require {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
