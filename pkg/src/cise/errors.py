"""Exception types raised across the package."""


class CiseError(Exception):
    """Base class for all package errors."""


class InvalidInput(CiseError):
    """Malformed or out-of-contract input (non-finite entries, bad sizes)."""


class SingularMatrix(CiseError):
    """A matrix required to be positive definite is numerically singular."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NotPSD(CiseError):
    """A matrix required to be positive semidefinite has a negative eigenvalue."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SliceError(CiseError):
    """A response slice is empty or too small for the requested statistic."""


class RankDeficientBasis(CiseError):
    """The regression design built from an f-basis is rank deficient."""


class RankDeficient(CiseError):
    """A matrix expected to have full column rank does not."""


class ActiveSetTooSmall(CiseError):
    """Penalization removed so many variables that fewer than d remain."""


class AllFitsFailed(CiseError):
    """No point of the tuning grid produced a converged fit."""


class MissingColumn(CiseError):
    """The requested response column is absent from the input file."""


class ParseError(CiseError):
    """A CSV cell failed to parse as a number."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class TooFewRows(CiseError):
    """The dataset has too few rows for the number of predictors."""
