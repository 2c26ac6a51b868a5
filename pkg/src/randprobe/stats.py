"""Two-sample comparison pipeline: Kolmogorov-Smirnov, Shapiro-Wilk
normality screening, and conditional Welch t-tests.

Decision protocol: a pair of sources differs significantly when its KS
p-value is below 0.005. Welch t-tests are run as a secondary check only
when every source passes the Shapiro-Wilk normality screen at 0.05, since
a mean test is meaningless on clearly non-normal metric distributions.
All tests are two-sided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import betainc, kolmogorov
from scipy.stats import shapiro as _scipy_shapiro

from .errors import DegenerateSample, EmptySample, SampleSizeOutOfRange

KS_THRESHOLD = 0.005
SW_THRESHOLD = 0.05
EXACT_KS_CAP = 10_000


@dataclass
class TestResult:
    statistic: float
    p_value: float
    method: str  # ks_exact | ks_asymptotic | shapiro_wilk | welch_t
    df: float | None = None


def _as_floats(a, name: str) -> np.ndarray:
    arr = np.asarray(list(a), dtype=float)
    if arr.size == 0:
        raise EmptySample(f"sample {name} is empty")
    return arr


def _ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """D = sup |ECDF_a - ECDF_b| over all observed points."""
    a_sorted = np.sort(a)
    b_sorted = np.sort(b)
    pooled = np.concatenate([a_sorted, b_sorted])
    cdf_a = np.searchsorted(a_sorted, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b_sorted, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def _ks_exact_p(a: np.ndarray, b: np.ndarray) -> Fraction:
    """Exact permutation p-value by lattice-path counting.

    A labeling of the pooled, tie-free sample is a monotone path from (0,0)
    to (m,n); the statistic at vertex (i,j) is |i*n - j*m| / (m*n). The
    observed path fixes d = max |i*n - j*m|; p is the fraction of the
    C(m+n, m) equally likely paths that reach d or more, counted by a DP
    over paths constrained to stay strictly below d.
    """
    m, n = a.size, b.size
    labels = np.concatenate([np.zeros(m, dtype=int), np.ones(n, dtype=int)])
    order = np.argsort(np.concatenate([a, b]), kind="stable")
    i = j = 0
    d_obs = 0
    for lab in labels[order]:
        if lab == 0:
            i += 1
        else:
            j += 1
        d_obs = max(d_obs, abs(i * n - j * m))
    # count paths whose every vertex satisfies |i*n - j*m| <= d_obs - 1
    cap = d_obs - 1
    prev = [0] * (n + 1)
    prev[0] = 1
    for jj in range(1, n + 1):
        prev[jj] = prev[jj - 1] if jj * m <= cap else 0
    for ii in range(1, m + 1):
        cur = [0] * (n + 1)
        cur[0] = prev[0] if ii * n <= cap else 0
        for jj in range(1, n + 1):
            if abs(ii * n - jj * m) <= cap:
                cur[jj] = cur[jj - 1] + prev[jj]
        prev = cur
    total = math.comb(m + n, m)
    return Fraction(total - prev[n], total)


def ks_two_sample(a, b, exact_cap: int = EXACT_KS_CAP) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test.

    The exact permutation p-value is used when |a|*|b| <= exact_cap and the
    pooled sample is entirely tie-free (any repeated value, within or across
    samples, falls back to the asymptotic path; the permutation argument
    needs distinct ranks). Otherwise p comes from the asymptotic Kolmogorov
    distribution evaluated at D * sqrt(|a||b| / (|a|+|b|)).
    """
    xa = _as_floats(a, "a")
    xb = _as_floats(b, "b")
    d = _ks_statistic(xa, xb)
    m, n = xa.size, xb.size
    pooled = np.concatenate([xa, xb])
    tie_free = np.unique(pooled).size == pooled.size
    if m * n <= exact_cap and tie_free:
        p = float(_ks_exact_p(xa, xb))
        return TestResult(statistic=d, p_value=p, method="ks_exact")
    lam = d * math.sqrt(m * n / (m + n))
    p = float(kolmogorov(lam))
    return TestResult(statistic=d, p_value=min(1.0, max(0.0, p)), method="ks_asymptotic")


def shapiro_wilk(a) -> TestResult:
    """Shapiro-Wilk normality test (AS R94 approximation, 3 <= n <= 5000)."""
    xa = _as_floats(a, "a")
    if not 3 <= xa.size <= 5000:
        raise SampleSizeOutOfRange(f"shapiro_wilk needs 3..5000 values, got {xa.size}")
    if np.ptp(xa) == 0:
        raise DegenerateSample("shapiro_wilk needs non-constant values")
    w, p = _scipy_shapiro(xa)
    return TestResult(statistic=float(w), p_value=float(p), method="shapiro_wilk")


def welch_t(a, b) -> TestResult:
    """Welch unequal-variance t-test, two-sided.

    t = (mean_a - mean_b) / sqrt(s2_a/m + s2_b/n) with Welch-Satterthwaite
    degrees of freedom; the p-value is the regularized incomplete beta
    I_x(df/2, 1/2) at x = df / (df + t^2).
    """
    xa = _as_floats(a, "a")
    xb = _as_floats(b, "b")
    if xa.size < 2 or xb.size < 2:
        raise SampleSizeOutOfRange("welch_t needs at least 2 values per sample")
    va = float(np.var(xa, ddof=1))
    vb = float(np.var(xb, ddof=1))
    if va == 0.0 and vb == 0.0:
        raise DegenerateSample("welch_t needs nonzero variance in at least one sample")
    qa, qb = va / xa.size, vb / xb.size
    t = float((np.mean(xa) - np.mean(xb)) / math.sqrt(qa + qb))
    df = (qa + qb) ** 2 / (qa**2 / (xa.size - 1) + qb**2 / (xb.size - 1))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TestResult(statistic=t, p_value=min(1.0, max(0.0, p)), method="welch_t", df=df)


@dataclass
class StatReport:
    """Pairwise comparison report for one metric column.

    Matrices are (len(sources))^2 nested lists filled on the upper triangle
    (i < j) and None elsewhere. welch_p is None whenever the normality gate
    failed; sw_p holds None for sources whose screen could not run, with the
    reason in sw_note.
    """

    sources: list[str]
    ks_p: list[list[float | None]]
    ks_method: list[list[str | None]]
    sw_p: dict[str, float | None]
    sw_note: dict[str, str] = field(default_factory=dict)
    welch_p: list[list[float | None]] | None = None
    significant_pairs: list[dict] = field(default_factory=list)
    thresholds: dict = field(default_factory=lambda: {"ks": KS_THRESHOLD,
                                                      "welch": KS_THRESHOLD,
                                                      "sw": SW_THRESHOLD})

    def to_dict(self) -> dict:
        return {
            "sources": list(self.sources),
            "ks_p": self.ks_p,
            "ks_method": self.ks_method,
            "sw_p": self.sw_p,
            "sw_note": self.sw_note,
            "welch_p": self.welch_p,
            "significant_pairs": self.significant_pairs,
            "thresholds": self.thresholds,
        }

    def format_text(self) -> str:
        lines = []
        width = max(12, max((len(s) for s in self.sources), default=0) + 2)

        def matrix_block(title: str, matrix) -> None:
            lines.append(title)
            header = " " * width + "".join(f"{s:>{width}}" for s in self.sources)
            lines.append(header)
            for i, row_label in enumerate(self.sources):
                cells = []
                for j in range(len(self.sources)):
                    v = matrix[i][j]
                    cells.append(f"{'-':>{width}}" if v is None else f"{v:>{width}.5g}")
                lines.append(f"{row_label:<{width}}" + "".join(cells))
            lines.append("")

        matrix_block(f"Two-sample KS p-values (significance threshold {self.thresholds['ks']})",
                     self.ks_p)
        lines.append(f"Shapiro-Wilk p-values (normality threshold {self.thresholds['sw']})")
        for s in self.sources:
            v = self.sw_p.get(s)
            note = f"  [{self.sw_note[s]}]" if s in self.sw_note else ""
            lines.append(f"  {s:<{width}} {'-' if v is None else format(v, '.5g')}{note}")
        lines.append("")
        if self.welch_p is not None:
            matrix_block(f"Welch t-test p-values (significance threshold {self.thresholds['welch']})",
                         self.welch_p)
        else:
            lines.append("Welch t-tests skipped: normality screen failed for at least one source")
            lines.append("")
        if self.significant_pairs:
            lines.append("Significant pairs:")
            for entry in self.significant_pairs:
                a, b = entry["pair"]
                lines.append(f"  {a} vs {b}  [{entry['test']}]  p={entry['p']:.5g}")
        else:
            lines.append("Significant pairs: none")
        return "\n".join(lines) + "\n"


def decision_pipeline(samples_by_source: dict[str, list[float]]) -> StatReport:
    """Full protocol over one metric column.

    Computes the pairwise KS matrix and flags pairs below 0.005; screens
    each source with Shapiro-Wilk; runs the Welch matrix only when every
    source passes the screen at 0.05. Sources whose screen cannot run
    (constant values, too few samples) are recorded with a note and fail
    the gate, which is the conservative reading.
    """
    labels = list(samples_by_source)
    if len(labels) < 2:
        raise ValueError("decision_pipeline needs at least 2 sources")
    k = len(labels)
    ks_p: list[list[float | None]] = [[None] * k for _ in range(k)]
    ks_method: list[list[str | None]] = [[None] * k for _ in range(k)]
    significant: list[dict] = []
    for i in range(k):
        for j in range(i + 1, k):
            res = ks_two_sample(samples_by_source[labels[i]], samples_by_source[labels[j]])
            ks_p[i][j] = res.p_value
            ks_method[i][j] = res.method
            if res.p_value < KS_THRESHOLD:
                significant.append({"pair": [labels[i], labels[j]], "test": "ks",
                                    "p": res.p_value})
    sw_p: dict[str, float | None] = {}
    sw_note: dict[str, str] = {}
    gate = True
    for label in labels:
        try:
            res = shapiro_wilk(samples_by_source[label])
            sw_p[label] = res.p_value
            if res.p_value < SW_THRESHOLD:
                gate = False
        except (DegenerateSample, SampleSizeOutOfRange) as exc:
            sw_p[label] = None
            sw_note[label] = type(exc).__name__
            gate = False
    welch_p = None
    if gate:
        welch_p = [[None] * k for _ in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                try:
                    res = welch_t(samples_by_source[labels[i]], samples_by_source[labels[j]])
                except (DegenerateSample, SampleSizeOutOfRange):
                    continue
                welch_p[i][j] = res.p_value
                if res.p_value < KS_THRESHOLD:
                    significant.append({"pair": [labels[i], labels[j]], "test": "welch",
                                        "p": res.p_value})
    return StatReport(sources=labels, ks_p=ks_p, ks_method=ks_method, sw_p=sw_p,
                      sw_note=sw_note, welch_p=welch_p, significant_pairs=significant)
