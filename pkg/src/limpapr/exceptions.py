"""Exception hierarchy shared by the solvers, the harness and the CLI."""


class LimPaprError(Exception):
    """Base class for every error raised by this package."""


class InfeasibleError(LimPaprError, ValueError):
    """The parameters admit no finite saddle point (lambda = 0 with delta <= 1)."""


class ConvergenceError(LimPaprError, RuntimeError):
    """An iterative solver exhausted its iteration budget.

    ``solution`` carries the last iterate when the solver has one to offer.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class BracketError(LimPaprError, RuntimeError):
    pass


class NegativePowerError(LimPaprError, ArithmeticError):
    pass


class QuadratureError(LimPaprError, RuntimeError):
    pass


class DegenerateError(LimPaprError, ValueError):
    pass


class SingularError(LimPaprError, ArithmeticError):
    pass


class InsufficientDataError(LimPaprError, ValueError):
    pass


class EmptyBranchError(LimPaprError, ValueError):
    pass


class TargetUnreachableError(LimPaprError, ValueError):
    pass


class NonMonotoneError(LimPaprError, RuntimeError):
    pass
