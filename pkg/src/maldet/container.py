"""Versioned binary container used by every on-disk artifact.

Layout (all integers little-endian):

    magic     8 bytes  b"MALDETBX"
    kind      8 bytes  padded ascii tag (e.g. b"MODEL   ")
    version   u32
    meta_len  u64, followed by UTF-8 JSON metadata
    n_arrays  u32
    per array:
        name_len u16, name bytes
        dtype_len u8, numpy dtype string (little-endian codes)
        ndim u8, dims (u64 each)
        payload_len u64, raw array bytes (C order)
    crc32     u32 over everything after the magic

Round trips are bit-exact; any damage surfaces as DataFormatError.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .errors import DataFormatError

MAGIC = b"MALDETBX"


def _le_dtype(arr: np.ndarray) -> np.ndarray:
    dt = arr.dtype
    if dt.byteorder == ">":
        return arr.astype(dt.newbyteorder("<"))
    return arr


def write(path, kind: str, version: int, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    kind_b = kind.encode("ascii")
    if len(kind_b) > 8:
        raise ValueError(f"kind tag too long: {kind!r}")
    kind_b = kind_b.ljust(8)

    body = bytearray()
    body += kind_b
    body += struct.pack("<I", version)
    meta_b = json.dumps(meta, sort_keys=True).encode("utf-8")
    body += struct.pack("<Q", len(meta_b))
    body += meta_b
    body += struct.pack("<I", len(arrays))
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(_le_dtype(arr))
        name_b = name.encode("utf-8")
        dt_b = arr.dtype.str.encode("ascii")
        body += struct.pack("<H", len(name_b)) + name_b
        body += struct.pack("<B", len(dt_b)) + dt_b
        body += struct.pack("<B", arr.ndim)
        for d in arr.shape:
            body += struct.pack("<Q", d)
        raw = arr.tobytes()
        body += struct.pack("<Q", len(raw))
        body += raw

    crc = zlib.crc32(bytes(body)) & 0xFFFFFFFF
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(body)
        f.write(struct.pack("<I", crc))


def peek_kind(path) -> str:
    """Read just the kind tag; raises DataFormatError on a foreign file."""
    with open(path, "rb") as f:
        head = f.read(16)
    if len(head) < 16 or head[:8] != MAGIC:
        raise DataFormatError(f"{path}: bad magic, not a maldet container")
    return head[8:16].decode("ascii").rstrip()


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataFormatError(f"{self.path}: truncated file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        (val,) = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return val


def read(path, expected_kind: str) -> tuple[int, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(MAGIC) + 4 or raw[:8] != MAGIC:
        raise DataFormatError(f"{path}: bad magic, not a maldet container")

    body, crc_stored = raw[8:-4], struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise DataFormatError(f"{path}: checksum mismatch, file corrupted")

    r = _Reader(body, path)
    kind = r.take(8).decode("ascii").rstrip()
    if kind != expected_kind:
        raise DataFormatError(
            f"{path}: container holds {kind!r}, expected {expected_kind!r}")
    version = r.unpack("<I")
    meta_len = r.unpack("<Q")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except ValueError as e:
        raise DataFormatError(f"{path}: bad metadata block: {e}") from e

    arrays: dict[str, np.ndarray] = {}
    n_arrays = r.unpack("<I")
    for _ in range(n_arrays):
        name = r.take(r.unpack("<H")).decode("utf-8")
        dt = np.dtype(r.take(r.unpack("<B")).decode("ascii"))
        ndim = r.unpack("<B")
        shape = tuple(r.unpack("<Q") for _ in range(ndim))
        payload_len = r.unpack("<Q")
        expected = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        if payload_len != expected:
            raise DataFormatError(
                f"{path}: array {name!r} declares {payload_len} bytes, "
                f"shape {shape} needs {expected}")
        arrays[name] = np.frombuffer(r.take(payload_len), dtype=dt).reshape(shape).copy()
    return version, meta, arrays
