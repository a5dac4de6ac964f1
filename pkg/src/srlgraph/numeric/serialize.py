"""Flat binary container of named float64 tensors.

Layout (little endian)::

    magic     8 bytes  b"SRLGTENS"
    version   uint32
    meta_len  uint32, then meta_len bytes of UTF-8 JSON
    count     uint32
    count x { name_len uint32, name UTF-8,
              ndim uint32, ndim x uint64 dims,
              prod(dims) x float64 row-major payload }
"""

from __future__ import annotations

import json
import struct
from typing import Mapping

import numpy as np

MAGIC = b"SRLGTENS"
VERSION = 1


class FormatError(ValueError):
    pass


def dump_tensors(tensors: Mapping[str, np.ndarray], meta: dict | None = None) -> bytes:
    parts = [MAGIC, struct.pack("<I", VERSION)]
    blob = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    parts += [struct.pack("<I", len(blob)), blob, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        parts += [struct.pack("<I", len(raw)), raw, struct.pack("<I", arr.ndim)]
        parts += [struct.pack("<Q", d) for d in arr.shape]
        parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


def load_tensors(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if data[:8] != MAGIC:
        raise FormatError("not a tensor container (bad magic)")
    pos = 8

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise FormatError("truncated container")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    (version,) = take("<I")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    (meta_len,) = take("<I")
    meta = json.loads(data[pos : pos + meta_len].decode("utf-8"))
    pos += meta_len
    (count,) = take("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = take("<I")
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = take("<I")
        shape = take("<" + "Q" * ndim) if ndim else ()
        size = int(np.prod(shape)) if ndim else 1
        nbytes = 8 * size
        if pos + nbytes > len(data):
            raise FormatError(f"truncated payload for {name!r}")
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape)
        tensors[name] = arr.astype(np.float64)
        pos += nbytes
    return tensors, meta


def save(path, tensors: Mapping[str, np.ndarray], meta: dict | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_tensors(tensors, meta))


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        return load_tensors(fh.read())
