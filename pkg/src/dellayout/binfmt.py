"""Little-endian record writer/reader with a trailing CRC32, shared by the
layout archive and the feature file."""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import FormatError


class Writer:
    def __init__(self, magic: bytes, version: int):
        self._parts = [magic, struct.pack("<H", version)]

    def u32(self, value: int):
        self._parts.append(struct.pack("<I", value))

    def u64(self, value: int):
        self._parts.append(struct.pack("<Q", value))

    def f64(self, value: float):
        self._parts.append(struct.pack("<d", value))

    def text(self, value: str):
        raw = value.encode("utf-8")
        self._parts.append(struct.pack("<H", len(raw)))
        self._parts.append(raw)

    def array(self, values, dtype: str):
        self._parts.append(np.ascontiguousarray(values, dtype=dtype).tobytes())

    def getvalue(self) -> bytes:
        body = b"".join(self._parts)
        return body + struct.pack("<I", zlib.crc32(body))


class Reader:
    def __init__(self, data: bytes, magic: bytes, version: int, what: str):
        self.what = what
        if len(data) < len(magic) + 6:
            raise FormatError(f"{what}: truncated file")
        if data[: len(magic)] != magic:
            raise FormatError(f"{what}: bad magic bytes {data[:len(magic)]!r}")
        (found,) = struct.unpack_from("<H", data, len(magic))
        if found != version:
            raise FormatError(f"{what}: unsupported version {found} (expected {version})")
        body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
        if zlib.crc32(body) != crc:
            raise FormatError(f"{what}: checksum mismatch (corrupt or truncated file)")
        self._data = body
        self._pos = len(magic) + 2

    def _take(self, size: int) -> bytes:
        if self._pos + size > len(self._data):
            raise FormatError(f"{self.what}: truncated file")
        chunk = self._data[self._pos : self._pos + size]
        self._pos += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def text(self) -> str:
        (size,) = struct.unpack("<H", self._take(2))
        return self._take(size).decode("utf-8")

    def array(self, count: int, dtype: str) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self._take(count * dt.itemsize), dtype=dt).copy()

    def finish(self):
        if self._pos != len(self._data):
            raise FormatError(f"{self.what}: {len(self._data) - self._pos} trailing bytes")
