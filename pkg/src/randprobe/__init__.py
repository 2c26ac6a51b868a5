"""randprobe: algorithmic-randomness tests for bit sources.

Borel normality and four Solovay-Strassen witness-hunting metrics over
Carmichael targets, applied to PRNG / pi / Bernoulli / file sources, with a
KS + Shapiro-Wilk + Welch statistical comparison pipeline and a CLI driver.
"""

__version__ = "0.1.0"

from .algotests import (
    DEFAULT_CSSS4_TARGETS,
    TEST_NAMES,
    Csss4Config,
    MetricSample,
    borel_metric,
    csss1_min_witnesses,
    csss2_bits_used,
    csss3_bits_used,
    csss4_violation_average,
)
from .bitstream import (
    BitCursor,
    BitString,
    WitnessDraw,
    complement,
    draw_witness,
    load_bitfile,
    read_chunk,
    split_into_samples,
    write_bitfile,
)
from .cli import (
    BoxplotSummary,
    ExperimentConfig,
    parse_config,
    read_metrics,
    run_experiment,
    summarize_boxplot,
)
from .errors import (
    ConfigError,
    DegenerateSample,
    EmptySample,
    Exhausted,
    FormatError,
    RandprobeError,
    ResourceLimit,
    SampleSizeOutOfRange,
    TooShort,
    WidthMismatch,
)
from .generators import SourceSpec, generate, parse_source_spec, pi_bits
from .numtheory import (
    CarmichaelSet,
    DigitExpansion,
    ZOutcome,
    ceil_log2,
    enumerate_carmichael,
    jacobi,
    load_carmichael,
    mod_pow,
    save_carmichael,
    ss_witness,
    to_base,
    z_predicate,
    z_value,
    z_width,
)
from .stats import (
    StatReport,
    TestResult,
    decision_pipeline,
    ks_two_sample,
    shapiro_wilk,
    welch_t,
)

__all__ = [
    "__version__",
    "BitString", "BitCursor", "WitnessDraw", "read_chunk", "complement",
    "draw_witness", "load_bitfile", "write_bitfile", "split_into_samples",
    "SourceSpec", "generate", "parse_source_spec", "pi_bits",
    "CarmichaelSet", "DigitExpansion", "ZOutcome", "ceil_log2", "jacobi",
    "mod_pow", "ss_witness", "enumerate_carmichael", "save_carmichael",
    "load_carmichael", "to_base", "z_predicate", "z_value", "z_width",
    "MetricSample", "Csss4Config", "DEFAULT_CSSS4_TARGETS", "TEST_NAMES",
    "borel_metric", "csss1_min_witnesses", "csss2_bits_used",
    "csss3_bits_used", "csss4_violation_average",
    "TestResult", "StatReport", "ks_two_sample", "shapiro_wilk", "welch_t",
    "decision_pipeline",
    "ExperimentConfig", "BoxplotSummary", "parse_config", "run_experiment",
    "summarize_boxplot", "read_metrics",
    "RandprobeError", "Exhausted", "TooShort", "FormatError", "ResourceLimit",
    "WidthMismatch", "EmptySample", "SampleSizeOutOfRange", "DegenerateSample",
    "ConfigError",
]
