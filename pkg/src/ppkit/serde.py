"""Deterministic binary packing for model files.

Model files must be byte-identical across repeated runs with the same
seeds, so this format avoids anything environment-dependent: no
timestamps, no compression, fixed little-endian dtypes, JSON metadata
with sorted keys. Layout:

    magic (5 bytes)
    u32   metadata length
    bytes metadata (canonical JSON)
    u32   array count
    per array: dtype tag (2 bytes) | u8 ndim | u64 shape dims | raw data
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import PpkitError

MAGIC_LEN = 5

_DTYPE_BY_TAG = {b"i4": "<i4", b"i8": "<i8", b"f8": "<f8", b"u1": "|u1"}
_TAG_BY_KIND = {("i", 4): b"i4", ("i", 8): b"i8", ("f", 8): b"f8", ("u", 1): b"u1"}


def _canonical_json(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def pack_blob(magic: bytes, meta: dict, arrays: list[np.ndarray]) -> bytes:
    if len(magic) != MAGIC_LEN:
        raise ValueError(f"magic must be {MAGIC_LEN} bytes, got {len(magic)}")
    header = _canonical_json(meta)
    parts = [magic, struct.pack("<I", len(header)), header,
             struct.pack("<I", len(arrays))]
    for arr in arrays:
        tag = _TAG_BY_KIND.get((arr.dtype.kind, arr.dtype.itemsize))
        if tag is None:
            raise ValueError(f"unsupported array dtype {arr.dtype}")
        data = np.ascontiguousarray(arr).astype(_DTYPE_BY_TAG[tag], copy=False)
        parts.append(tag)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(data.tobytes(order="C"))
    return b"".join(parts)


def unpack_blob(data: bytes, magic: bytes) -> tuple[dict, list[np.ndarray]]:
    if data[:MAGIC_LEN] != magic:
        raise PpkitError(
            f"bad magic header: expected {magic!r}, found {data[:MAGIC_LEN]!r}"
        )
    offset = MAGIC_LEN
    (header_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    meta = json.loads(data[offset:offset + header_len].decode("utf-8"))
    offset += header_len
    (n_arrays,) = struct.unpack_from("<I", data, offset)
    offset += 4
    arrays = []
    for _ in range(n_arrays):
        tag = data[offset:offset + 2]
        offset += 2
        dtype = _DTYPE_BY_TAG.get(tag)
        if dtype is None:
            raise PpkitError(f"unknown array dtype tag {tag!r}")
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}Q", data, offset)
        offset += 8 * ndim
        count = 1
        for dim in shape:
            count *= dim
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        offset += arr.nbytes
        arrays.append(arr.reshape(shape).copy())
    return meta, arrays
