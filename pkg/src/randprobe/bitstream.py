"""Packed bit storage, cursor reading, complementation, and bitfile I/O.

Bit order is MSB-first everywhere: bit i of a string lives in byte i // 8
at bit position 7 - (i % 8), and integer chunks are read most significant
bit first. This is the interchange convention for the whole package and is
deliberately confined to this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import Exhausted, FormatError, TooShort

BITFILE_FORMATS = ("packed-msb", "ascii01")


class BitString:
    """Immutable sequence of bits packed MSB-first into bytes.

    Unused pad bits in the final byte are canonically zero, so equality is
    a plain (length, bytes) comparison. ``origin`` is a free-form label for
    provenance; it is carried along but excluded from equality.
    """

    __slots__ = ("_data", "_length", "origin")

    def __init__(self, data: bytes, length: int, origin: str = "") -> None:
        if length < 0:
            raise ValueError("bit length must be non-negative")
        nbytes = (length + 7) // 8
        if len(data) < nbytes:
            raise ValueError(f"need {nbytes} bytes to hold {length} bits, got {len(data)}")
        buf = bytes(data[:nbytes])
        if length % 8:
            # zero the pad bits so equal bit content means equal bytes
            mask = 0xFF << (8 - length % 8) & 0xFF
            buf = buf[:-1] + bytes([buf[-1] & mask])
        self._data = buf
        self._length = length
        self.origin = origin

    @classmethod
    def from_text01(cls, text: str, origin: str = "") -> "BitString":
        """Build from a string of '0'/'1' characters (whitespace ignored)."""
        squeezed = "".join(text.split())
        if squeezed.strip("01"):
            bad = squeezed.strip("01")[0]
            raise FormatError(f"invalid character {bad!r} in bit text")
        if not squeezed:
            return cls(b"", 0, origin)
        value = int(squeezed, 2)
        return cls.from_int(value, len(squeezed), origin)

    @classmethod
    def from_int(cls, value: int, width: int, origin: str = "") -> "BitString":
        """Pack the low ``width`` bits of ``value``, MSB of the field first."""
        if value < 0 or value >> width:
            raise ValueError("value does not fit in the requested width")
        nbytes = (width + 7) // 8
        shifted = value << (nbytes * 8 - width)
        return cls(shifted.to_bytes(nbytes, "big"), width, origin)

    @property
    def data(self) -> bytes:
        """Packed bytes, pad bits zero."""
        return self._data

    def __len__(self) -> int:
        return self._length

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._length == other._length and self._data == other._data

    def __hash__(self) -> int:
        return hash((self._length, self._data))

    def __repr__(self) -> str:
        return f"BitString(length={self._length}, origin={self.origin!r})"

    def bit(self, i: int) -> int:
        if not 0 <= i < self._length:
            raise IndexError("bit index out of range")
        return (self._data[i >> 3] >> (7 - (i & 7))) & 1

    def read_uint(self, pos: int, width: int) -> int:
        """Integer value of bits [pos, pos + width), MSB-first."""
        if width < 0 or pos < 0 or pos + width > self._length:
            raise ValueError("read window outside the string")
        if width == 0:
            return 0
        start = pos >> 3
        end = (pos + width + 7) >> 3
        chunk = int.from_bytes(self._data[start:end], "big")
        return (chunk >> ((end << 3) - (pos + width))) & ((1 << width) - 1)

    def to_text01(self) -> str:
        if self._length == 0:
            return ""
        return format(self.read_uint(0, self._length), f"0{self._length}b")

    def unpacked(self) -> np.ndarray:
        """Bits as a uint8 array of 0/1 values, one entry per bit."""
        return np.unpackbits(np.frombuffer(self._data, dtype=np.uint8))[: self._length]


def complement(x: BitString) -> BitString:
    """Flip every bit; length preserved, origin toggled with a "~" prefix."""
    if len(x) == 0:
        flipped = b""
    else:
        arr = np.frombuffer(x.data, dtype=np.uint8)
        flipped = np.bitwise_not(arr).tobytes()
    origin = x.origin[1:] if x.origin.startswith("~") else "~" + x.origin
    return BitString(flipped, len(x), origin)


def split_into_samples(x: BitString, count: int, sample_len: int) -> list[BitString]:
    """Cut ``count`` disjoint consecutive pieces of ``sample_len`` bits.

    Raises TooShort when the string cannot supply count * sample_len bits.
    Trailing bits beyond the last piece are ignored.
    """
    if count < 0 or sample_len < 0:
        raise ValueError("count and sample_len must be non-negative")
    if count * sample_len > len(x):
        raise TooShort(
            f"need {count * sample_len} bits for {count} samples of {sample_len}, have {len(x)}"
        )
    pieces = []
    for i in range(count):
        start = i * sample_len
        origin = f"{x.origin}[{i}]"
        if start % 8 == 0 and sample_len % 8 == 0:
            lo = start // 8
            pieces.append(BitString(x.data[lo : lo + sample_len // 8], sample_len, origin))
        else:
            pieces.append(BitString.from_int(x.read_uint(start, sample_len), sample_len, origin))
    return pieces


@dataclass
class WitnessDraw:
    """One accepted rejection-sampled value in [1, n-1].

    bits_consumed counts every chunk read, including rejected ones; trials
    is the accepted-draw contribution and is always 1 for a single draw.
    """

    value: int
    bits_consumed: int
    trials: int = 1


class BitCursor:
    """Mutable read position over a BitString.

    position is the next unread bit index and stays in [0, len(target)].
    With wrap enabled, reads that hit the end continue from bit 0 and
    position reflects the in-string offset; bits_read always counts the
    total consumed. A cursor belongs to one consumer at a time.
    """

    __slots__ = ("target", "position", "wrap", "bits_read")

    def __init__(self, target: BitString, position: int = 0, wrap: bool = False) -> None:
        if not 0 <= position <= len(target):
            raise ValueError("cursor position outside the string")
        self.target = target
        self.position = position
        self.wrap = wrap
        self.bits_read = 0

    def remaining(self) -> int:
        return len(self.target) - self.position

    def read(self, width: int) -> int:
        """Read ``width`` bits MSB-first as an unsigned integer."""
        if width < 1:
            raise ValueError("width must be >= 1")
        n = len(self.target)
        if width <= self.remaining():
            value = self.target.read_uint(self.position, width)
            self.position += width
            self.bits_read += width
            return value
        if not self.wrap or n == 0:
            raise Exhausted(
                f"cursor at {self.position}/{n} cannot supply {width} more bits"
            )
        value = 0
        need = width
        while need:
            if self.position == n:
                self.position = 0
            take = min(need, n - self.position)
            value = (value << take) | self.target.read_uint(self.position, take)
            self.position += take
            need -= take
        self.bits_read += width
        return value


def read_chunk(cursor: BitCursor, width: int) -> int:
    """Functional spelling of cursor.read(width)."""
    return cursor.read(width)


def draw_witness(cursor: BitCursor, n: int) -> WitnessDraw:
    """Rejection-sample a candidate in [1, n-1] from the cursor.

    Reads ceil(log2 n)-bit chunks and rejects values of 0 or > n-1, so the
    accepted value is uniform on [1, n-1] when the stream is uniform.
    Rejecting 0 matters: gcd(0, n) = n would fake a compositeness witness.
    In wrap mode the draw gives up with Exhausted after consuming a full
    cycle of the string without an acceptance.
    """
    if n <= 2 or n % 2 == 0:
        raise ValueError("n must be an odd integer greater than 2")
    width = n.bit_length()  # equals ceil(log2 n) since odd n is not a power of two
    limit = len(cursor.target) + width  # one full cycle, wrap mode only
    consumed = 0
    while True:
        value = cursor.read(width)
        consumed += width
        if 1 <= value <= n - 1:
            return WitnessDraw(value=value, bits_consumed=consumed, trials=1)
        if cursor.wrap and consumed > limit:
            raise Exhausted(
                f"no acceptable {width}-bit chunk for n={n} in a full pass of the stream"
            )


def load_bitfile(path, fmt: str, max_bits: int | None = None) -> BitString:
    """Read a bitfile as a BitString.

    packed-msb: raw bytes, each byte MSB-first; the declared bit length
    (max_bits) truncates trailing pad bits. ascii01: '0'/'1' characters
    with whitespace skipped; any other byte raises FormatError.
    """
    if fmt not in BITFILE_FORMATS:
        raise FormatError(f"unknown bitfile format {fmt!r}")
    if max_bits is not None and max_bits < 0:
        raise ValueError("max_bits must be non-negative")
    raw = Path(path).read_bytes()
    origin = str(path)
    if fmt == "packed-msb":
        nbits = len(raw) * 8
        if max_bits is not None:
            nbits = min(nbits, max_bits)
        return BitString(raw, nbits, origin)
    digits = b"".join(raw.split())
    bad = digits.translate(None, b"01")
    if bad:
        raise FormatError(f"invalid character {chr(bad[0])!r} in ascii01 file {origin}")
    if max_bits is not None:
        digits = digits[:max_bits]
    if not digits:
        return BitString(b"", 0, origin)
    bits = np.frombuffer(digits, dtype=np.uint8) - ord("0")
    return BitString(np.packbits(bits).tobytes(), len(digits), origin)


def write_bitfile(x: BitString, path, fmt: str) -> None:
    """Inverse of load_bitfile. packed-msb drops the bit length, so readers
    must truncate with a declared length when len(x) % 8 != 0."""
    if fmt not in BITFILE_FORMATS:
        raise FormatError(f"unknown bitfile format {fmt!r}")
    p = Path(path)
    if fmt == "packed-msb":
        p.write_bytes(x.data)
    else:
        p.write_text(x.to_text01() + "\n", encoding="ascii")
