"""Exception hierarchy. Each category maps to a CLI exit status."""


class SpillnetError(Exception):
    exit_code = 1


class InputError(SpillnetError):
    """Bad input data or configuration; also violated preconditions."""

    exit_code = 2


class EstimationError(SpillnetError):
    exit_code = 3


class RankDeficientError(EstimationError):
    pass


class ConvergenceError(EstimationError):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or []


class NumericalError(SpillnetError):
    """Covariance not positive definite, negative variance shares, NaN/Inf."""

    exit_code = 4


class OutputError(SpillnetError):
    exit_code = 5
