"""Deterministic bit sources: four PRNG families, binary digits of pi, a
biased Bernoulli source, and bitfile ingestion.

Each PRNG family is the published core recurrence implemented directly, so
output is self-contained and checkable against independent transcriptions:

- mt19937: 32-bit Mersenne Twister (Matsumoto & Nishimura).
- xoroshiro128plus: xoroshiro128+ 1.0 (Blackman & Vigna, rotations 24/16/37).
- pcg32: PCG XSH-RR 64/32 (O'Neill), multiplier 6364136223846793005.
- philox4x32: Philox-4x32-10 counter-based generator (Salmon et al.).

Word serialization is MSB-first within each output word. Families with
state wider than one seed word expand the 64-bit seed through splitmix64;
that expansion is part of the interchange contract: the first splitmix64
output fills the first state word, the second output the next, and for
philox the single output's low 32 bits become key0 and high 32 bits key1.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np

from .bitstream import BitString, load_bitfile
from .errors import FormatError, TooShort

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1

FAMILIES = ("mt19937", "xoroshiro128plus", "pcg32", "philox4x32", "pi", "bernoulli", "file")
_SEEDED = ("mt19937", "xoroshiro128plus", "pcg32", "philox4x32", "bernoulli")


@dataclass
class SourceSpec:
    """Declarative description of one bit source.

    seed is required for the PRNG families and bernoulli, and must be absent
    for pi and file. bias is bernoulli-only; path and format are file-only.
    """

    family: str
    seed: int | None = None
    bias: float | None = None
    path: str | None = None
    format: str | None = None

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise FormatError(f"unknown source family {self.family!r}")
        needs_seed = self.family in _SEEDED
        if needs_seed and self.seed is None:
            raise FormatError(f"family {self.family!r} requires a seed")
        if not needs_seed and self.seed is not None:
            raise FormatError(f"family {self.family!r} takes no seed")
        if self.seed is not None and not 0 <= self.seed <= MASK64:
            raise FormatError("seed must be an unsigned 64-bit integer")
        if self.family == "bernoulli":
            if self.bias is None or not 0.0 <= self.bias <= 1.0:
                raise FormatError("bernoulli requires bias in [0, 1]")
        elif self.bias is not None:
            raise FormatError(f"family {self.family!r} takes no bias")
        if self.family == "file":
            if not self.path or not self.format:
                raise FormatError("file source requires path and format")
        else:
            if self.path is not None or self.format is not None:
                raise FormatError(f"family {self.family!r} takes no path/format")


def parse_source_spec(text: str) -> SourceSpec:
    """Parse "family" or "family:key=value,key=value" into a SourceSpec.

    Example: "bernoulli:bias=0.4,seed=7" or "file:path=x.bin,format=packed-msb".
    """
    family, _, rest = text.partition(":")
    family = family.strip()
    kwargs: dict[str, object] = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key, value = key.strip(), value.strip()
            if not eq or not key:
                raise FormatError(f"malformed source spec item {item!r}")
            if key == "seed":
                kwargs["seed"] = int(value, 0)
            elif key == "bias":
                kwargs["bias"] = float(value)
            elif key in ("path", "format"):
                kwargs[key] = value
            else:
                raise FormatError(f"unknown source spec key {key!r}")
    spec = SourceSpec(family=family, **kwargs)
    spec.validate()
    return spec


class SplitMix64:
    """splitmix64 (Steele, Lea & Flood); also the seed-expansion convention."""

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_word(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def _splitmix64_block(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized splitmix64 outputs for draw indices [start, start+count)."""
    with np.errstate(over="ignore"):
        state = (np.uint64(seed) + np.uint64(SplitMix64.GAMMA) *
                 (np.arange(start + 1, start + count + 1, dtype=np.uint64)))
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class MT19937:
    """Standard 32-bit Mersenne Twister with the 1812433253 initializer."""

    word_bits = 32

    def __init__(self, seed: int) -> None:
        mt = [seed & MASK32] + [0] * 623
        for i in range(1, 624):
            mt[i] = (1812433253 * (mt[i - 1] ^ (mt[i - 1] >> 30)) + i) & MASK32
        self._mt = mt
        self._index = 624

    def _twist(self) -> None:
        mt = self._mt
        for i in range(624):
            y = (mt[i] & 0x80000000) | (mt[(i + 1) % 624] & 0x7FFFFFFF)
            value = y >> 1
            if y & 1:
                value ^= 0x9908B0DF
            mt[i] = mt[(i + 397) % 624] ^ value
        self._index = 0

    def next_word(self) -> int:
        if self._index >= 624:
            self._twist()
        y = self._mt[self._index]
        self._index += 1
        y ^= y >> 11
        y ^= (y << 7) & 0x9D2C5680
        y ^= (y << 15) & 0xEFC60000
        return y ^ (y >> 18)


def _rotl64(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoroshiro128Plus:
    """xoroshiro128+ 1.0; state expanded from the seed via splitmix64.

    The two splitmix64 outputs can never both be zero (the inverse image of
    zero under the output mix is a single state, and consecutive states
    differ), so the all-zero fixed point is unreachable.
    """

    word_bits = 64

    def __init__(self, seed: int) -> None:
        sm = SplitMix64(seed)
        self._s0 = sm.next_word()
        self._s1 = sm.next_word()

    def next_word(self) -> int:
        s0, s1 = self._s0, self._s1
        result = (s0 + s1) & MASK64
        s1 ^= s0
        self._s0 = _rotl64(s0, 24) ^ s1 ^ ((s1 << 16) & MASK64)
        self._s1 = _rotl64(s1, 37)
        return result


class Pcg32:
    """PCG XSH-RR 64/32. Seeded with splitmix64 words as (initstate, initseq)."""

    word_bits = 32
    MULT = 6364136223846793005

    def __init__(self, seed: int) -> None:
        sm = SplitMix64(seed)
        self._init(sm.next_word(), sm.next_word())

    @classmethod
    def from_stream(cls, initstate: int, initseq: int) -> "Pcg32":
        obj = cls.__new__(cls)
        obj._init(initstate, initseq)
        return obj

    def _init(self, initstate: int, initseq: int) -> None:
        self._inc = ((initseq << 1) | 1) & MASK64
        self._state = 0
        self._step()
        self._state = (self._state + initstate) & MASK64
        self._step()

    def _step(self) -> None:
        self._state = (self._state * self.MULT + self._inc) & MASK64

    def next_word(self) -> int:
        old = self._state
        self._step()
        xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & MASK32


class Philox4x32:
    """Philox-4x32 with 10 rounds over a 128-bit little-endian word counter.

    The 64-bit key comes from one splitmix64 output: low half is key0, high
    half is key1. Each block emits its four 32-bit outputs in order.
    """

    word_bits = 32
    M0 = 0xD2511F53
    M1 = 0xCD9E8D57
    W0 = 0x9E3779B9
    W1 = 0xBB67AE85

    def __init__(self, seed: int) -> None:
        key = SplitMix64(seed).next_word()
        self._init(key & MASK32, (key >> 32) & MASK32)

    @classmethod
    def from_key(cls, key0: int, key1: int) -> "Philox4x32":
        obj = cls.__new__(cls)
        obj._init(key0, key1)
        return obj

    def _init(self, key0: int, key1: int) -> None:
        self._key0 = key0
        self._key1 = key1
        self._counter = 0
        self._buffer: list[int] = []

    def _block(self, counter: int) -> list[int]:
        x = [(counter >> (32 * i)) & MASK32 for i in range(4)]
        k0, k1 = self._key0, self._key1
        for _ in range(10):
            p0 = self.M0 * x[0]
            p1 = self.M1 * x[2]
            x = [
                ((p1 >> 32) ^ x[1] ^ k0) & MASK32,
                p1 & MASK32,
                ((p0 >> 32) ^ x[3] ^ k1) & MASK32,
                p0 & MASK32,
            ]
            k0 = (k0 + self.W0) & MASK32
            k1 = (k1 + self.W1) & MASK32
        return x

    def next_word(self) -> int:
        if not self._buffer:
            self._buffer = self._block(self._counter)
            self._counter += 1
        return self._buffer.pop(0)


_PRNG_CLASSES = {
    "mt19937": MT19937,
    "xoroshiro128plus": Xoroshiro128Plus,
    "pcg32": Pcg32,
    "philox4x32": Philox4x32,
}


def _prng_bits(family: str, seed: int, n_bits: int) -> bytes:
    gen = _PRNG_CLASSES[family](seed)
    width = gen.word_bits
    nbytes_word = width // 8
    out = bytearray()
    for _ in range((n_bits + width - 1) // width):
        out += gen.next_word().to_bytes(nbytes_word, "big")
    return bytes(out)


def _bernoulli_bits(seed: int, bias: float, n_bits: int) -> bytes:
    if bias >= 1.0:
        return b"\xff" * ((n_bits + 7) // 8)
    threshold = np.uint64(int(bias * 2.0**64))
    chunks = []
    block = 1 << 22
    for start in range(0, n_bits, block):
        count = min(block, n_bits - start)
        words = _splitmix64_block(seed, start, count)
        chunks.append((words < threshold).astype(np.uint8))
    return np.packbits(np.concatenate(chunks)).tobytes()


def generate(spec: SourceSpec, n_bits: int, origin: str | None = None) -> BitString:
    """Materialize the first n_bits bits of the source described by spec.

    Pure and fully deterministic: the same spec always yields the same
    prefix, and generate(spec, a) is a prefix of generate(spec, b) for a <= b.
    """
    spec.validate()
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    label = origin if origin is not None else spec.family
    if spec.family == "pi":
        out = pi_bits(n_bits)
        return BitString(out.data, n_bits, label)
    if spec.family == "file":
        loaded = load_bitfile(spec.path, spec.format, max_bits=n_bits)
        if len(loaded) < n_bits:
            raise TooShort(f"file {spec.path} holds {len(loaded)} bits, need {n_bits}")
        return BitString(loaded.data, n_bits, label)
    if spec.family == "bernoulli":
        return BitString(_bernoulli_bits(spec.seed, spec.bias, n_bits), n_bits, label)
    return BitString(_prng_bits(spec.family, spec.seed, n_bits), n_bits, label)


# --- binary digits of pi -------------------------------------------------

def _atan_inv_sum(r, a: int, b: int):
    """Binary splitting for sum_{k=a}^{b-1} (-1)^k / ((2k+1) r^k).

    Returns (A, B, rpow) with the partial sum equal to A / (B * r^(b-1))
    and rpow = r^(b-a). Merging two adjacent ranges costs a handful of
    big-integer multiplies, which keeps the whole evaluation quasi-linear.
    """
    if b - a == 1:
        return (gmpy2.mpz(1 if a % 2 == 0 else -1), gmpy2.mpz(2 * a + 1), r)
    mid = (a + b) // 2
    a1, b1, r1 = _atan_inv_sum(r, a, mid)
    a2, b2, r2 = _atan_inv_sum(r, mid, b)
    return (a1 * r2 * b2 + a2 * b1, b1 * b2, r1 * r2)


def _atan_inv_fixed(q: int, prec: int):
    """floor-accurate fixed point of 2^prec * arctan(1/q) for integer q >= 2."""
    import math

    n_terms = max(2, int(prec / (2 * math.log2(q))) + 2)
    big_a, big_b, _ = _atan_inv_sum(gmpy2.mpz(q) ** 2, 0, n_terms)
    den = big_b * (gmpy2.mpz(q) ** 2) ** (n_terms - 1) * q
    return (big_a << prec) // den

_pi_cache: tuple[int, int] | None = None  # (prec, floor(pi * 2^prec))


def _pi_fixed(prec: int) -> int:
    """floor(pi * 2^prec) by Machin's formula 16 atan(1/5) - 4 atan(1/239)."""
    global _pi_cache
    if _pi_cache is None or _pi_cache[0] < prec:
        work = prec + 32
        value = 16 * _atan_inv_fixed(5, work) - 4 * _atan_inv_fixed(239, work)
        _pi_cache = (prec, int(value >> 32))
    cached_prec, cached = _pi_cache
    return cached >> (cached_prec - prec)


def pi_bits(n_bits: int) -> BitString:
    """First n_bits bits of the fractional binary expansion of pi.

    Fixed-point big-integer evaluation of Machin's two-arctan formula with
    binary splitting and 64 guard bits; the largest value computed so far
    is cached, and shorter requests slice its prefix.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    guard = 64
    fixed = _pi_fixed(n_bits + guard)
    frac = fixed - (3 << (n_bits + guard))
    value = frac >> guard
    return BitString.from_int(value, n_bits, "pi")
