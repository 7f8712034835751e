"""Exception types shared across the toolkit."""


class EcftError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(EcftError, ValueError):
    """A distribution parameter violates its constraints (e.g. sigma <= 0)."""


class ArgumentError(EcftError, ValueError):
    """An operation argument is out of range (e.g. n = 0, bad probability)."""


class DegenerateSampleError(EcftError, ValueError):
    """The sample is constant, so scale estimates vanish and studentization fails."""


class UnsupportedSampleSizeError(EcftError, ValueError):
    """The requested statistic is not defined at this sample size."""


class ModulusUnderflowError(EcftError, ArithmeticError):
    """ECF modulus below 1e-300: the statistic's logarithm is numerically meaningless."""


class DataFormatError(EcftError, ValueError):
    """An input data file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class ConfigurationError(EcftError, ValueError):
    """Mismatched pieces of configuration (e.g. a region used for the wrong test/n)."""


class MissingCalibrationError(EcftError, RuntimeError):
    """A power run needs regions that the cache does not hold.

    ``pairs`` lists the uncovered (test, n) combinations.
    """

    def __init__(self, pairs):
        self.pairs = list(pairs)
        listing = ", ".join(f"({test.value}, n={n})" for test, n in self.pairs)
        super().__init__(
            f"no calibrated rejection region for: {listing}; "
            f"run calibration first or enable auto-calibration"
        )
