"""Exception hierarchy for :mod:`fastmusic`."""


class FastMusicError(Exception):
    """Base class for all package errors."""


class ParameterError(FastMusicError, ValueError):
    """An argument is outside its documented domain."""


class ConvergenceError(FastMusicError, ArithmeticError):
    """An iterative factorization did not converge.

    Attributes
    ----------
    residual : float
        Last observed residual norm, ``nan`` when the backend gave none.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class RankDeficiencyError(FastMusicError, ArithmeticError):
    """A matrix expected to have full column (or row) rank does not.

    Attributes
    ----------
    index : int
        First column (or row) whose pivot fell below the rank threshold.
    """

    def __init__(self, message, index):
        super().__init__(f"{message} (deficient index {index})")
        self.index = index


class SingularMatrixError(FastMusicError, ArithmeticError):
    """A matrix that must be inverted is numerically singular."""
