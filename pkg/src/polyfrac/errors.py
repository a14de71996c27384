"""Exception types shared across the package."""


class PolyfracError(Exception):
    """Base class for all errors raised by this package."""


class PrecisionExceeded(PolyfracError):
    """A digit place or truncation beyond the stored precision was requested."""


class DimensionMismatch(PolyfracError):
    """Vector length does not match the ambient dimension."""


class ZeroVector(PolyfracError):
    """Operation undefined for the zero vector."""


class DegenerateNorm(PolyfracError):
    """Functional family does not have full rank."""


class BadPivot(PolyfracError):
    """A functional has no usable pivot coordinate."""


class NonDyadicCoefficient(PolyfracError):
    """Coefficient table entry is not a (mantissa, precision) dyadic pair."""


class OutOfRange(PolyfracError):
    """Parameter outside its admissible range."""


class InfeasibleSchedule(PolyfracError):
    """Block schedule violates a structural constraint."""


class IndexOutOfRange(PolyfracError, IndexError):
    """Block index outside 1..K."""


class NoSolution(PolyfracError):
    """Pivot-digit solver found no admissible bit string."""


class MissingCheckpoint(PolyfracError):
    """Requested checkpoint scale is not present in the series."""


class InsufficientData(PolyfracError):
    """Not enough series entries for a slope fit."""


class SaturatedData(PolyfracError):
    """Slope fit requested over saturated sampled counts."""


class BudgetExceeded(PolyfracError):
    """Cube-examination budget exhausted during exact counting."""

    def __init__(self, message, examined=None, scale=None):
        super().__init__(message)
        self.examined = examined
        self.scale = scale


class FormatError(PolyfracError):
    """Malformed or mismatched on-disk artifact."""
