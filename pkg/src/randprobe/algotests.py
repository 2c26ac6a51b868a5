"""The five per-string test metrics.

borel: worst block-frequency deviation scaled by log2 of the length.
csss1: minimum k such that k witness draws per target expose every target.
csss2: total accepted-draw bits until each target has a witness.
csss3: Z-predicate bit accounting over one segment per target.
csss4: average Z violations per sliding-window repetition.

Each metric is a pure function of (bits, parameters): same input, same
value, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bitstream import BitCursor, BitString, draw_witness
from .errors import Exhausted, TooShort
from .numtheory import ceil_log2, digit_count_minus_one, ss_witness, z_value, z_width

DEFAULT_CSSS4_TARGETS = (9, 15, 21, 25, 27, 33, 35, 39, 45, 49)

TEST_NAMES = ("borel", "csss1", "csss2", "csss3", "csss4")


@dataclass
class MetricSample:
    """One (source, string, test, complemented) measurement row."""

    source: str
    string_index: int
    test: str
    complemented: bool
    value: float | int | None
    params: dict = field(default_factory=dict)
    error: str | None = None


def _is_odd_composite(n: int) -> bool:
    if n < 9 or n % 2 == 0:
        return False
    return any(n % d == 0 for d in range(3, int(n**0.5) + 1, 2))


@dataclass
class Csss4Config:
    """Targets and sliding stride for the windowed violation test."""

    targets: tuple[int, ...] = DEFAULT_CSSS4_TARGETS
    offset_stride: int = 1

    def __post_init__(self) -> None:
        self.targets = tuple(self.targets)
        for n in self.targets:
            if not _is_odd_composite(n):
                raise ValueError(f"csss4 target {n} must be an odd composite >= 9")
        if self.offset_stride < 1:
            raise ValueError("offset_stride must be >= 1")


def borel_metric(x: BitString) -> float:
    """Worst-case block-frequency deviation, scaled by log2 of the length.

    For each block size m from 1 to floor(log2 log2 |x|), the string is cut
    into floor(|x|/m) non-overlapping m-bit blocks (remainder discarded) and
    every one of the 2^m patterns is counted. The metric is the maximum of
    |N_j^m / |x|_m  -  2^-m| * log2 |x| over all (m, j); a value <= 1 means
    every pattern frequency sits within 1/log2|x| of its ideal share.
    """
    n = len(x)
    if n < 4:
        raise TooShort("borel metric needs at least 4 bits")
    m_max = int(math.floor(math.log2(math.log2(n))))
    bits = x.unpacked()
    log2n = math.log2(n)
    worst = 0.0
    for m in range(1, m_max + 1):
        nblocks = n // m
        blocks = bits[: nblocks * m].reshape(nblocks, m)
        weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
        patterns = blocks @ weights
        counts = np.bincount(patterns, minlength=1 << m)
        deviation = np.abs(counts / nblocks - 1.0 / (1 << m)) * log2n
        worst = max(worst, float(deviation.max()))
    return worst


def _target_list(targets) -> list[int]:
    out = sorted(int(n) for n in targets)
    if not out:
        raise ValueError("targets must be non-empty")
    return out


@lru_cache(maxsize=None)
def _witness_table(n: int) -> bytes:
    """table[i] = 1 iff W(i, n), for i in [0, n-1]; entry 0 unused."""
    return bytes([0] + [1 if ss_witness(i, n) else 0 for i in range(1, n)])


def csss1_min_witnesses(x: BitString, targets, wrap: bool = False) -> int:
    """Smallest k for which k draws per target expose every target.

    Pass k reads from bit 0: for each target in ascending order, k candidate
    values are rejection-sampled (all k are drawn before checking, so the
    stream position never depends on witness outcomes). If some target got
    no witness among its k draws, the pass fails and pass k+1 restarts from
    bit 0. Minimality is inherent: passes run k = 1, 2, ... in order.
    """
    ns = _target_list(targets)
    k = 1
    while True:
        cursor = BitCursor(x, wrap=wrap)
        try:
            ok = True
            for n in ns:
                draws = [draw_witness(cursor, n).value for _ in range(k)]
                if not any(ss_witness(i, n) for i in draws):
                    ok = False
            if ok:
                return k
        except Exhausted as exc:
            raise Exhausted(f"stream exhausted during pass k={k}: {exc}") from exc
        k += 1


def csss2_bits_used(x: BitString, targets, wrap: bool = False) -> int:
    """Accepted-draw bits consumed until every target reveals a witness.

    One cursor runs through the string; for each target n in ascending
    order, candidates are drawn until one is a witness, and the metric grows
    by ceil(log2 n) per accepted draw. Rejected chunks advance the stream
    but are not charged.
    """
    ns = _target_list(targets)
    cursor = BitCursor(x, wrap=wrap)
    total = 0
    for n in ns:
        width = ceil_log2(n)
        while True:
            candidate = draw_witness(cursor, n).value
            total += width
            if ss_witness(candidate, n):
                break
    return total


def csss3_bits_used(x: BitString, targets, j_max_mode: str = "k", wrap: bool = False) -> int:
    """Z-predicate bit accounting: one segment of l(3l-2) bits per target.

    Reads each target's segment in ascending order from one cursor and sums
    bits_charged: j * ceil(log2(n-1)) when the first witness is digit j,
    the full segment width on a violation.
    """
    ns = _target_list(targets)
    cursor = BitCursor(x, wrap=wrap)
    total = 0
    for n in ns:
        m = z_width(n)
        value = cursor.read(m)
        total += z_value(value, m, n, j_max_mode).bits_charged
    return total


def csss4_violation_average(x: BitString, cfg: Csss4Config | None = None,
                            j_max_mode: str = "k") -> float:
    """Average number of per-target Z violations over sliding repetitions.

    A repetition at offset o reads each target's l(3l-2)-bit segment
    sequentially starting at bit o and counts targets whose segment shows no
    witness among its tested digits. Offsets advance by cfg.offset_stride
    while a full repetition still fits.
    """
    if cfg is None:
        cfg = Csss4Config()
    if j_max_mode not in ("k", "k_minus_1"):
        raise ValueError(f"unknown j_max_mode {j_max_mode!r}")
    ns = sorted(cfg.targets)
    per_target = []
    for n in ns:
        m = z_width(n)
        radix = n - 1
        k = digit_count_minus_one(radix, m)
        j_count = (k + 1) if j_max_mode == "k" else k
        per_target.append((m, radix, j_count, _witness_table(n)))
    window = sum(m for m, _, _, _ in per_target)
    if len(x) < window:
        raise TooShort(f"need at least one {window}-bit repetition, have {len(x)} bits")
    stride = cfg.offset_stride
    reps = (len(x) - window) // stride + 1
    violations = 0
    read_uint = x.read_uint
    for r in range(reps):
        value = read_uint(r * stride, window)
        shift = window
        for m, radix, j_count, table in per_target:
            shift -= m
            v = (value >> shift) & ((1 << m) - 1)
            for _ in range(j_count):
                d = v % radix
                v //= radix
                if table[1 + d]:
                    break
            else:
                violations += 1
    return violations / reps
