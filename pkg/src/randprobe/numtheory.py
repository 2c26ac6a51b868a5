"""Modular arithmetic, Solovay-Strassen witnesses, Carmichael enumeration,
base-(n-1) digit expansion, and the primality predicate built from them.

The witness predicate W(i, n) is true iff gcd(i, n) > 1 or
i^((n-1)/2) is not congruent to the Jacobi symbol (i/n) mod n. Truth
certifies that n is composite; for odd primes no i qualifies, and for odd
composites at least half of [1, n-1] does.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np

from .bitstream import BitString
from .errors import FormatError, ResourceLimit, WidthMismatch

_CARM_MAGIC = b"CARMSET1"


def ceil_log2(v: int) -> int:
    """Smallest w with 2^w >= v, for v >= 1."""
    if v < 1:
        raise ValueError("v must be positive")
    return (v - 1).bit_length()


def mod_pow(base: int, exp: int, modulus: int) -> int:
    """base^exp mod modulus on arbitrary-precision integers.

    Delegates to the built-in pow, which is the standard square-and-multiply
    ladder; kept as a named operation so the contract has one home.
    """
    if modulus < 2:
        raise ValueError("modulus must be >= 2")
    if base < 0 or exp < 0:
        raise ValueError("base and exp must be non-negative")
    return pow(base, exp, modulus)


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n >= 3 by the binary reciprocity algorithm.

    Returns 0 exactly when gcd(a, n) > 1. Factors powers of two out of the
    numerator, flipping sign when n is 3 or 5 mod 8, and swaps via quadratic
    reciprocity, flipping sign when both sides are 3 mod 4.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError("n must be odd and >= 3")
    if a < 0:
        raise ValueError("a must be non-negative")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def ss_witness(i: int, n: int) -> bool:
    """Solovay-Strassen compositeness witness predicate W(i, n).

    True iff gcd(i, n) > 1 or i^((n-1)/2) mod n differs from (i/n) mod n,
    where a Jacobi value of -1 is represented as n - 1. The gcd test runs
    first; it is part of the definition and skips the exponentiation.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError("n must be odd and >= 3")
    if not 1 <= i <= n - 1:
        raise ValueError("i must lie in [1, n-1]")
    if gcd(i, n) > 1:
        return True
    return pow(i, (n - 1) // 2, n) != jacobi(i, n) % n


@dataclass
class CarmichaelSet:
    """Sorted Carmichael numbers up to an inclusive bound."""

    bound: int
    members: list[int]

    def __post_init__(self) -> None:
        if any(b >= a for a, b in zip(self.members[1:], self.members)):
            raise ValueError("members must be strictly increasing")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _odd_prime_sieve(bound: int) -> np.ndarray:
    """Boolean array over odd numbers: entry i covers 2*i + 1."""
    size = (bound + 1) // 2
    sieve = np.ones(size, dtype=bool)
    sieve[0] = False  # 1 is not prime
    limit = int(bound**0.5)
    for p in range(3, limit + 1, 2):
        if sieve[p // 2]:
            sieve[(p * p) // 2 :: p] = False
    return sieve


def enumerate_carmichael(bound: int, memory_budget: int = 2 << 30) -> CarmichaelSet:
    """All Carmichael numbers <= bound.

    Strategy: odd-only prime sieve, then a Fermat base-2 prefilter over odd
    composites (every Carmichael number is odd, hence coprime to 2 and must
    pass), then Korselt's criterion on the few surviving 2-pseudoprimes:
    squarefree with p - 1 dividing n - 1 for every prime factor p.

    The sieve costs one byte per odd number; bounds whose sieve would exceed
    memory_budget raise ResourceLimit instead of attempting the allocation.
    """
    if bound < 2:
        raise ValueError("bound must be >= 2")
    if (bound + 1) // 2 > memory_budget:
        raise ResourceLimit(
            f"bound {bound} needs a {(bound + 1) // 2}-byte sieve, budget is {memory_budget}"
        )
    sieve = _odd_prime_sieve(bound)
    is_odd_prime = sieve.__getitem__  # index by n // 2

    members = []
    small_primes = None
    for n in range(9, bound + 1, 2):
        if is_odd_prime(n // 2):
            continue
        if pow(2, n - 1, n) != 1:
            continue
        if small_primes is None:
            limit = int(bound**0.5) + 1
            small_primes = [int(2 * i + 1) for i in np.flatnonzero(sieve[: (limit + 1) // 2 + 1])]
        if _korselt(n, small_primes):
            members.append(n)
    return CarmichaelSet(bound=bound, members=members)


def _korselt(n: int, small_primes: list[int]) -> bool:
    """Korselt check for odd composite n: squarefree and p-1 | n-1 for all p | n."""
    m = n
    factors = 0
    for p in small_primes:
        if p * p > m:
            break
        if m % p == 0:
            m //= p
            if m % p == 0:
                return False  # not squarefree
            if (n - 1) % (p - 1) != 0:
                return False
            factors += 1
    if m > 1:
        if (n - 1) % (m - 1) != 0:
            return False
        factors += 1
    return factors >= 2


def save_carmichael(cs: CarmichaelSet, path) -> None:
    """Versioned binary cache: magic, u64 bound, u64 count, u64 members (LE)."""
    payload = struct.pack("<QQ", cs.bound, len(cs.members))
    body = np.asarray(cs.members, dtype="<u8").tobytes()
    Path(path).write_bytes(_CARM_MAGIC + payload + body)


def load_carmichael(path) -> CarmichaelSet:
    raw = Path(path).read_bytes()
    if raw[: len(_CARM_MAGIC)] != _CARM_MAGIC:
        raise FormatError(f"{path} is not a Carmichael cache file")
    bound, count = struct.unpack_from("<QQ", raw, len(_CARM_MAGIC))
    body = raw[len(_CARM_MAGIC) + 16 :]
    if len(body) != 8 * count:
        raise FormatError(f"{path} is truncated")
    members = np.frombuffer(body, dtype="<u8").astype(int).tolist()
    return CarmichaelSet(bound=bound, members=members)


@dataclass
class DigitExpansion:
    """Little-endian digits d_0..d_k of a value in radix n-1, zero padded."""

    radix: int
    digits: list[int]
    k: int


def digit_count_minus_one(radix: int, m: int) -> int:
    """Smallest k with radix^(k+1) > 2^m - 1."""
    top = (1 << m) - 1
    k = 0
    power = radix
    while power <= top:
        power *= radix
        k += 1
    return k


def to_base(value: int, n: int, m: int) -> DigitExpansion:
    """Digits of value in base n-1, padded to the width implied by m bits.

    k is the smallest integer with (n-1)^(k+1) > 2^m - 1, so any m-bit value
    fits in exactly k+1 digits.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if not 0 <= value <= (1 << m) - 1:
        raise ValueError("value out of range for the declared bit width")
    radix = n - 1
    k = digit_count_minus_one(radix, m)
    digits = []
    v = value
    for _ in range(k + 1):
        digits.append(v % radix)
        v //= radix
    return DigitExpansion(radix=radix, digits=digits, k=k)


@dataclass
class ZOutcome:
    """Result of one Z-predicate evaluation.

    violated means every tested W came back false, i.e. the segment failed
    to certify compositeness. bits_charged follows the bit-accounting rule:
    j * ceil(log2(n-1)) when the first witness sits at digit index j, and
    the full segment width m on a violation.
    """

    violated: bool
    first_witness_index: int | None
    bits_charged: int


def z_width(n: int) -> int:
    """Segment width l(l + 2c) with l = bit length of n and c = l - 1."""
    ell = n.bit_length()
    return ell * (3 * ell - 2)


def z_value(value: int, m: int, n: int, j_max_mode: str = "k") -> ZOutcome:
    """Z predicate on the integer read from an m-bit segment.

    Expands value in base n-1 and evaluates W(1 + d_j, n) for j = 0, 1, ...
    up to k (mode "k") or k-1 (mode "k_minus_1"), stopping at the first
    witness. Digits are extracted lazily so the common early-witness case
    does only the divisions it needs.
    """
    if j_max_mode not in ("k", "k_minus_1"):
        raise ValueError(f"unknown j_max_mode {j_max_mode!r}")
    radix = n - 1
    k = digit_count_minus_one(radix, m)
    j_limit = k if j_max_mode == "k" else k - 1
    cost = ceil_log2(radix)
    v = value
    for j in range(j_limit + 1):
        d = v % radix
        v //= radix
        if ss_witness(1 + d, n):
            return ZOutcome(violated=False, first_witness_index=j, bits_charged=j * cost)
    return ZOutcome(violated=True, first_witness_index=None, bits_charged=m)


def z_predicate(segment: BitString, n: int, j_max_mode: str = "k") -> ZOutcome:
    """Z predicate on a bit segment of width l(l + 2c), c = l - 1.

    The Chaitin-Schwartz construction: for sufficiently random segments the
    predicate's violated flag is true exactly when n is prime, because a
    prime has no witnesses at all while a composite is overwhelmingly likely
    to reveal one among the base-(n-1) digits.
    """
    m = z_width(n)
    if len(segment) != m:
        raise WidthMismatch(f"segment must be exactly {m} bits for n={n}, got {len(segment)}")
    return z_value(segment.read_uint(0, m), m, n, j_max_mode)
