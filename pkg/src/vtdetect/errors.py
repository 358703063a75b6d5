"""Exception hierarchy shared by every module.

The CLI maps these onto its exit codes: ``ConfigError`` -> 1,
``DataError`` -> 2, ``NumericError`` -> 3.
"""


class VtdetectError(Exception):
    """Base class for all package errors."""


class ConfigError(VtdetectError, ValueError):
    """Invalid configuration or hyperparameter."""


class DataError(VtdetectError, ValueError):
    """Malformed or unusable input data."""


class ModelFormatError(DataError):
    """A model container could not be decoded."""


class BadMagicError(ModelFormatError):
    def __init__(self, found=b""):
        super().__init__(f"not a model file (magic {found!r})")


class VersionMismatchError(ModelFormatError):
    def __init__(self, found, supported):
        super().__init__(f"unsupported model format version {found} (this build reads {supported})")


class TruncatedError(ModelFormatError):
    def __init__(self, what="model"):
        super().__init__(f"truncated {what}: unexpected end of data")


class NumericError(VtdetectError, ArithmeticError):
    """Base class for numerical failures."""


class DivergenceError(NumericError):
    """Training produced a non-finite objective."""


class ZeroProbabilityError(NumericError):
    """An unsmoothed language model assigned probability zero."""
