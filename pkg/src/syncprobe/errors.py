"""Exception hierarchy shared across the package.

CLI exit codes map onto these: ValidationError -> 1, NumericalError -> 2,
DataFormatError / OSError -> 3.
"""


class SyncprobeError(Exception):
    """Base class for all package errors."""


class ValidationError(SyncprobeError, ValueError):
    """Invalid argument or ill-formed input object."""


class NumericalError(SyncprobeError, ArithmeticError):
    """Numerical failure: drift, divergence, defective decompositions."""


class DegeneracyError(NumericalError):
    """Accidental transition-frequency collision."""


class UndefinedCorrelationError(NumericalError):
    """Pearson correlation requested on a zero-variance window."""


class DataFormatError(SyncprobeError, ValueError):
    """Malformed on-disk dataset or model file."""
