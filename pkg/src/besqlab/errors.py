"""Exception types shared across the package."""


class BesqError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BesqError, ValueError):
    pass


class DomainError(BesqError, ValueError):
    """A spectral function was evaluated outside its domain."""


class InvalidOrderError(BesqError, ValueError):
    pass


class InvalidGridError(BesqError, ValueError):
    pass


class SingularDriftError(BesqError, ArithmeticError):
    """Two particles collided exactly while regularization was disabled."""


class InvalidSigmaError(BesqError, ValueError):
    pass


class InvalidPointError(BesqError, ValueError):
    pass


class EvaluationError(BesqError, ArithmeticError):
    pass


class PreconditionError(BesqError, ValueError):
    """Experiment parameters fall outside the regime an experiment is defined for."""
