"""MSB-first bit packing used by the VVC1 and FBC1 containers."""

from __future__ import annotations

from .imaging import FormatError


class BitWriter:
    def __init__(self) -> None:
        self._out = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, nbits: int) -> None:
        """Append the nbits-wide big-endian representation of value."""
        if value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nbits += nbits
        while self._nbits >= 8:
            self._nbits -= 8
            self._out.append((self._acc >> self._nbits) & 0xFF)
        self._acc &= (1 << self._nbits) - 1

    def getvalue(self) -> bytes:
        """Zero-pad to a byte boundary and return the packed bytes."""
        if self._nbits:
            self._out.append((self._acc << (8 - self._nbits)) & 0xFF)
            self._acc = 0
            self._nbits = 0
        return bytes(self._out)


class BitReader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0          # byte position
        self._bit = 0          # bits consumed within current byte

    def read(self, nbits: int) -> int:
        value = 0
        remaining = nbits
        while remaining:
            if self._pos >= len(self._data):
                raise FormatError("bitstream truncated")
            avail = 8 - self._bit
            take = min(avail, remaining)
            byte = self._data[self._pos]
            chunk = (byte >> (avail - take)) & ((1 << take) - 1)
            value = (value << take) | chunk
            self._bit += take
            if self._bit == 8:
                self._bit = 0
                self._pos += 1
            remaining -= take
        return value

    def align_checked(self) -> None:
        """Skip to the next byte boundary, requiring the pad bits be zero."""
        if self._bit:
            pad = self.read(8 - self._bit)
            if pad:
                raise FormatError("nonzero padding bits")

    def bytes_consumed(self) -> int:
        return self._pos + (1 if self._bit else 0)
