"""Exception hierarchy shared across the package."""


class ConductLabError(Exception):
    """Base class for all package errors."""


class DomainError(ConductLabError, ValueError):
    """Parameters fall outside the region where the model is defined."""


class SingularModelError(ConductLabError, ArithmeticError):
    """Demand and cost slopes coincide, so the equilibrium is not unique."""


class NumericalError(ConductLabError, ArithmeticError):
    """A numerical evaluation produced a non-finite value."""


class DegenerateError(ConductLabError, ArithmeticError):
    """A quantity that must be nonzero (a partial, a slope) vanished."""


class RankDeficientError(ConductLabError, ArithmeticError):
    """Regressor or instrument matrix lacks full column rank."""


class InsufficientDataError(ConductLabError, ValueError):
    """Too few observations for the requested fit."""


class EmptyInputError(ConductLabError, ValueError):
    """An operation that needs at least one item received none."""


class DatasetFormatError(ConductLabError, ValueError):
    """A serialized dataset is malformed; the message cites the location."""
