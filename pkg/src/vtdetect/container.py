"""The versioned ``VTXT`` binary container.

Layout (all integers little-endian)::

    b"VTXT"            magic
    u16                format version
    u32                section count
    repeated:
        4 bytes        section tag, e.g. b"CLSF", b"NGLM", b"FUSE"
        u64            payload length
        payload

Sections are written in the order given and read back into an ordered
dict, so a save/load/save cycle reproduces the same bytes.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagicError, ModelFormatError, TruncatedError, VersionMismatchError

MAGIC = b"VTXT"
VERSION = 1


class Writer:
    def __init__(self):
        self._parts = []

    def raw(self, b: bytes):
        self._parts.append(bytes(b))

    def u8(self, v):
        self.raw(struct.pack("<B", v))

    def u16(self, v):
        self.raw(struct.pack("<H", v))

    def u32(self, v):
        self.raw(struct.pack("<I", v))

    def u64(self, v):
        self.raw(struct.pack("<Q", v))

    def i64(self, v):
        self.raw(struct.pack("<q", v))

    def f64(self, v):
        self.raw(struct.pack("<d", v))

    def text(self, s: str):
        b = s.encode("utf-8")
        self.u32(len(b))
        self.raw(b)

    def f32_array(self, a: np.ndarray):
        self.raw(np.ascontiguousarray(a, dtype="<f4").tobytes())

    def f64_array(self, a: np.ndarray):
        self.raw(np.ascontiguousarray(a, dtype="<f8").tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes, what: str = "model"):
        self._data = memoryview(data)
        self._pos = 0
        self._what = what

    def raw(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise TruncatedError(self._what)
        out = self._data[self._pos:self._pos + n].tobytes()
        self._pos += n
        return out

    def _unpack(self, fmt, n):
        return struct.unpack(fmt, self.raw(n))[0]

    def u8(self):
        return self._unpack("<B", 1)

    def u16(self):
        return self._unpack("<H", 2)

    def u32(self):
        return self._unpack("<I", 4)

    def u64(self):
        return self._unpack("<Q", 8)

    def i64(self):
        return self._unpack("<q", 8)

    def f64(self):
        return self._unpack("<d", 8)

    def text(self) -> str:
        return self.raw(self.u32()).decode("utf-8")

    def f32_array(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(self.raw(4 * count), dtype="<f4").astype(np.float32).reshape(shape)

    def f64_array(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(self.raw(8 * count), dtype="<f8").astype(np.float64).reshape(shape)

    def at_end(self) -> bool:
        return self._pos == len(self._data)

    def expect_end(self):
        if not self.at_end():
            raise ModelFormatError(f"{len(self._data) - self._pos} trailing bytes in {self._what}")


def pack(sections: dict[bytes, bytes]) -> bytes:
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    w.u32(len(sections))
    for tag, payload in sections.items():
        if len(tag) != 4:
            raise ValueError(f"section tag must be 4 bytes, got {tag!r}")
        w.raw(tag)
        w.u64(len(payload))
        w.raw(payload)
    return w.getvalue()


def unpack(data: bytes) -> dict[bytes, bytes]:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(bytes(data[:4]))
    r = Reader(data)
    r.raw(4)
    version = r.u16()
    if version != VERSION:
        raise VersionMismatchError(version, VERSION)
    sections = {}
    for _ in range(r.u32()):
        tag = r.raw(4)
        sections[tag] = r.raw(r.u64())
    r.expect_end()
    return sections
