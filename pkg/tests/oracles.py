"""Independent naive reference implementations used as test oracles.

Everything here is a direct, unoptimized transcription of the published
definition or recurrence, written without looking at the package code so
that a shared bug is unlikely. Keep these slow and obvious.
"""

import math
from fractions import Fraction
from itertools import combinations

M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF


# --- number theory --------------------------------------------------------

def naive_modpow(base, exp, mod):
    acc = 1 % mod
    for _ in range(exp):
        acc = (acc * base) % mod
    return acc


def naive_is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def naive_factorize(n):
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def naive_legendre(a, p):
    """(a/p) for odd prime p via Euler's criterion."""
    a %= p
    if a == 0:
        return 0
    r = pow(a, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def naive_jacobi(a, n):
    """(a/n) as the product of Legendre symbols over the factorization of n."""
    result = 1
    for p, e in naive_factorize(n).items():
        result *= naive_legendre(a, p) ** e
    return result


def naive_witness(i, n):
    """Solovay-Strassen witness straight from the definition."""
    if math.gcd(i, n) != 1:
        return True
    return pow(i, (n - 1) // 2, n) != naive_jacobi(i, n) % n


def naive_carmichael(bound):
    """Odd composites passing the Fermat congruence for every coprime base."""
    found = []
    for n in range(3, bound + 1, 2):
        if naive_is_prime(n):
            continue
        ok = True
        for b in range(2, n):
            if math.gcd(b, n) == 1 and pow(b, n - 1, n) != 1:
                ok = False
                break
        if ok:
            found.append(n)
    return found


# --- generators -----------------------------------------------------------

def ref_splitmix64_stream(seed, count):
    x = seed & M64
    out = []
    for _ in range(count):
        x = (x + 0x9E3779B97F4A7C15) & M64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        out.append(z ^ (z >> 31))
    return out


def ref_mt19937_stream(seed, count):
    # full-array formulation: seed, twist whole blocks, then temper
    n, m_off = 624, 397
    mt = [0] * n
    mt[0] = seed & M32
    for i in range(1, n):
        mt[i] = (1812433253 * (mt[i - 1] ^ (mt[i - 1] >> 30)) + i) & M32
    out = []
    idx = n
    while len(out) < count:
        if idx == n:
            for i in range(n):
                y = (mt[i] & 0x80000000) + (mt[(i + 1) % n] & 0x7FFFFFFF)
                mt[i] = mt[(i + m_off) % n] ^ (y >> 1)
                if y % 2 != 0:
                    mt[i] ^= 0x9908B0DF
            idx = 0
        y = mt[idx]
        idx += 1
        y = y ^ (y >> 11)
        y = y ^ ((y << 7) & 0x9D2C5680)
        y = y ^ ((y << 15) & 0xEFC60000)
        y = y ^ (y >> 18)
        out.append(y)
    return out


def ref_xoroshiro128plus_stream(s0, s1, count):
    def rotl(x, k):
        return ((x << k) & M64) | (x >> (64 - k))

    out = []
    for _ in range(count):
        out.append((s0 + s1) & M64)
        t = s1 ^ s0
        s0 = rotl(s0, 24) ^ t ^ ((t << 16) & M64)
        s1 = rotl(t, 37)
    return out


def ref_pcg32_stream(initstate, initseq, count):
    mult = 6364136223846793005
    inc = ((initseq << 1) | 1) & M64
    state = 0
    state = (state * mult + inc) & M64
    state = (state + initstate) & M64
    state = (state * mult + inc) & M64
    out = []
    for _ in range(count):
        old = state
        state = (old * mult + inc) & M64
        xs = (((old >> 18) ^ old) >> 27) & M32
        rot = old >> 59
        out.append(((xs >> rot) | (xs << ((32 - rot) & 31))) & M32)
    return out


def ref_philox4x32_block(counter_words, key_words):
    """One Philox-4x32-10 block; counter_words and key_words are tuples."""
    x = list(counter_words)
    k0, k1 = key_words
    for _ in range(10):
        prod0 = 0xD2511F53 * x[0]
        prod1 = 0xCD9E8D57 * x[2]
        x = [((prod1 >> 32) ^ x[1] ^ k0) & M32, prod1 & M32,
             ((prod0 >> 32) ^ x[3] ^ k1) & M32, prod0 & M32]
        k0 = (k0 + 0x9E3779B9) & M32
        k1 = (k1 + 0xBB67AE85) & M32
    return x


def ref_pi_bbp_fixed(prec):
    """floor(pi * 2^prec) from the Bailey-Borwein-Plouffe series, summed
    term by term in fixed point until terms vanish."""
    extra = 32
    scale = 1 << (prec + extra)
    total = 0
    k = 0
    while True:
        term = (4 * scale // (8 * k + 1)
                - 2 * scale // (8 * k + 4)
                - scale // (8 * k + 5)
                - scale // (8 * k + 6)) >> (4 * k)
        if term == 0:
            break
        total += term
        k += 1
    return total >> extra


# --- metrics --------------------------------------------------------------

def naive_borel(bits01):
    """Dictionary-counting transcription of the block frequency metric."""
    n = len(bits01)
    m_max = int(math.floor(math.log2(math.log2(n))))
    worst = 0.0
    for m in range(1, m_max + 1):
        nblocks = n // m
        counts = {}
        for b in range(nblocks):
            block = bits01[b * m:(b + 1) * m]
            counts[block] = counts.get(block, 0) + 1
        for pattern_index in range(2 ** m):
            pattern = format(pattern_index, f"0{m}b")
            freq = counts.get(pattern, 0) / nblocks
            dev = abs(freq - 2.0 ** (-m)) * math.log2(n)
            worst = max(worst, dev)
    return worst


# --- statistics -----------------------------------------------------------

def ks_d_of_labeled(values_a, values_b):
    points = sorted(set(values_a) | set(values_b))
    d = 0.0
    for t in points:
        fa = sum(1 for v in values_a if v <= t) / len(values_a)
        fb = sum(1 for v in values_b if v <= t) / len(values_b)
        d = max(d, abs(fa - fb))
    return d


def naive_ks_exact_p(a, b):
    """Exact permutation p-value by enumerating every label assignment."""
    pooled = list(a) + list(b)
    m = len(a)
    d_obs = _d_frac(a, b)  # exact rational, dodges float fuzz
    total = 0
    at_least = 0
    for idx in combinations(range(len(pooled)), m):
        chosen = set(idx)
        xa = [pooled[i] for i in range(len(pooled)) if i in chosen]
        xb = [pooled[i] for i in range(len(pooled)) if i not in chosen]
        total += 1
        if _d_frac(xa, xb) >= d_obs:
            at_least += 1
    assert total == math.comb(len(pooled), m)
    return Fraction(at_least, total)


def _d_frac(values_a, values_b):
    points = sorted(set(values_a) | set(values_b))
    best = Fraction(0)
    for t in points:
        fa = Fraction(sum(1 for v in values_a if v <= t), len(values_a))
        fb = Fraction(sum(1 for v in values_b if v <= t), len(values_b))
        best = max(best, abs(fa - fb))
    return best
