"""Exception hierarchy shared by every module in the package."""


class RenyiLabError(Exception):
    """Base class for all errors raised by renyi_lab."""


class AlgebraMismatch(RenyiLabError, ValueError):
    """Operands do not belong to the same block algebra, or shapes disagree."""


class NumericalFailure(RenyiLabError, ArithmeticError):
    """An iterative routine did not converge or a postcondition check failed."""


class DomainError(RenyiLabError, ValueError):
    """A scalar function is undefined on part of an operator's spectrum."""


class InvalidAlpha(RenyiLabError, ValueError):
    pass


class InvalidParameter(RenyiLabError, ValueError):
    pass


class TraceMismatch(RenyiLabError, ValueError):
    """A construction would break invariance of the weighted trace."""


class DegenerateDensity(RenyiLabError, ValueError):
    pass


class GenerationFailure(RenyiLabError, RuntimeError):
    pass


class InvalidSchedule(RenyiLabError, ValueError):
    pass


class PreconditionViolated(RenyiLabError, ValueError):
    """A check was requested on inputs for which the inequality has no warrant."""
