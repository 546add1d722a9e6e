"""Exception hierarchy shared by all eegbench modules."""


class EEGBenchError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(EEGBenchError, ValueError):
    pass


class DegenerateSignalError(InvalidInputError):
    """A signal has zero RMS / zero variance where a nonzero one is required."""


class ShapeError(EEGBenchError, ValueError):
    pass


class FormatError(EEGBenchError, ValueError):
    """A file on disk does not match the expected layout.

    ``field`` names the offending header field or file when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SpecError(EEGBenchError, ValueError):
    """Invalid filter or model settings."""


class NumericError(EEGBenchError, ArithmeticError):
    pass


class DecompositionError(EEGBenchError):
    pass


class ConfigError(EEGBenchError, ValueError):
    pass
