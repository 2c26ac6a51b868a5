"""Error taxonomy shared across the package.

Every exception raised deliberately by this package derives from
RandprobeError, so callers can catch one base class at the CLI boundary.
"""


class RandprobeError(Exception):
    """Base class for all errors raised by randprobe."""


class Exhausted(RandprobeError):
    """A bit stream ran out before a read or draw could complete."""


class TooShort(RandprobeError):
    """Input string is too short for the requested operation."""


class FormatError(RandprobeError):
    """Malformed input data (bitfile, config value, spec string)."""


class ResourceLimit(RandprobeError):
    """Requested computation exceeds the configured resource budget."""


class WidthMismatch(RandprobeError):
    """Segment has the wrong bit width for the requested evaluation."""


class EmptySample(RandprobeError):
    """Statistical test received an empty sample."""


class SampleSizeOutOfRange(RandprobeError):
    """Sample size outside the supported range for this test."""


class DegenerateSample(RandprobeError):
    """Sample has zero variance where variability is required."""


class ConfigError(RandprobeError):
    """Invalid experiment configuration or command-line usage."""
