"""Exception and warning classes.

Errors fall in two families so callers (and the CLI exit codes) can tell
bad input from numerical breakdown.
"""


class SparseVARError(Exception):
    """Base class for all package errors."""


class DataError(SparseVARError, ValueError):
    """The supplied data cannot support the requested operation."""


class NumericalError(SparseVARError, ArithmeticError):
    """A numerical routine broke down."""


class UsageError(SparseVARError, ValueError):
    """Invalid configuration or unsupported model combination."""


class InsufficientData(DataError):
    pass


class NonFinite(DataError):
    pass


class ZeroVariance(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero variance")


class DimensionMismatch(DataError):
    pass


class EmptySupport(DataError):
    pass


class MissingExogenousFutures(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class UnsupportedStructure(UsageError):
    pass


class NonVarModel(UsageError):
    pass


class RankDeficient(NumericalError):
    pass


class SingularW22(NumericalError):
    def __init__(self, iteration, message="triangular solve with W22 broke down"):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")


class EigenFailure(NumericalError):
    pass


class NotStationary(NumericalError):
    pass


class NotSPD(NumericalError):
    pass


class MaxIterExceeded(UserWarning):
    """Solver stopped at ``max_iter``; the best iterate was returned."""


class RankDeficientWarning(UserWarning):
    """Least-squares design was rank deficient; a minimum-norm solution was used."""
