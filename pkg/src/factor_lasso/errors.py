"""Exception hierarchy.

Data problems derive from :class:`DataError`, numerical failures from
:class:`NumericalError`; the CLI maps the two families to distinct exit codes.
"""


class FactorLassoError(Exception):
    """Base class for all package errors."""


class DataError(FactorLassoError, ValueError):
    pass


class InvalidDataError(DataError):
    """Non-finite or otherwise malformed input values."""


class UnbalancedPanelError(DataError):
    pass


class DuplicateCellError(DataError):
    pass


class ParseError(DataError):
    pass


class DimensionError(FactorLassoError, ValueError):
    """Shapes or counts outside the admissible range."""


class DomainError(FactorLassoError, ValueError):
    """Parameter outside its mathematical domain."""


class NumericalError(FactorLassoError, ArithmeticError):
    pass


class SingularityError(NumericalError):
    pass


class DegenerateSpectrumError(NumericalError):
    pass


class DegenerateTreatmentError(NumericalError):
    """Treatment residual has zero variation after partialling out controls."""


class ReplicateDegenerateError(DegenerateTreatmentError):
    """A single bootstrap replicate produced a degenerate treatment residual."""


class BootstrapFailureError(NumericalError):
    pass


class WeakInstrumentError(NumericalError):
    """Partialled instrument has zero variation."""


class CalibrationError(FactorLassoError, ValueError):
    pass
