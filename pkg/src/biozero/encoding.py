"""Length-prefixed big-endian framing shared by the binary file formats."""

from __future__ import annotations

import struct

from biozero.group import GroupError, GroupParams


class DecodeError(ValueError):
    pass


class Writer:
    def __init__(self, params: GroupParams):
        self.params = params
        self.parts: list[bytes] = []

    def raw(self, data: bytes) -> "Writer":
        self.parts.append(data)
        return self

    def u8(self, x: int) -> "Writer":
        return self.raw(struct.pack(">B", x))

    def u32(self, x: int) -> "Writer":
        return self.raw(struct.pack(">I", x))

    def u64(self, x: int) -> "Writer":
        return self.raw(struct.pack(">Q", x))

    def blob(self, data: bytes) -> "Writer":
        return self.u32(len(data)).raw(data)

    def elements(self, xs) -> "Writer":
        enc = self.params.encode_element
        self.parts.extend(enc(x) for x in xs)
        return self

    def scalars(self, xs) -> "Writer":
        enc = self.params.encode_scalar
        self.parts.extend(enc(x) for x in xs)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class Reader:
    def __init__(self, params: GroupParams, data: bytes):
        self.params = params
        self.data = memoryview(data)
        self.pos = 0

    def raw(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise DecodeError("unexpected end of data")
        chunk = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.raw(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.raw(8))[0]

    def blob(self, limit: int | None = None) -> bytes:
        n = self.u32()
        if limit is not None and n > limit:
            raise DecodeError("length prefix too large")
        return self.raw(n)

    def elements(self, n: int) -> tuple[int, ...]:
        size = self.params.element_len
        try:
            return tuple(self.params.decode_element(self.raw(size)) for _ in range(n))
        except GroupError as exc:
            raise DecodeError(str(exc)) from exc

    def scalars(self, n: int) -> tuple[int, ...]:
        size = self.params.scalar_len
        try:
            return tuple(self.params.decode_scalar(self.raw(size)) for _ in range(n))
        except GroupError as exc:
            raise DecodeError(str(exc)) from exc

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def done(self) -> None:
        if self.remaining():
            raise DecodeError(f"{self.remaining()} trailing bytes")
