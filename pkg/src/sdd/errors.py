"""Exception hierarchy shared by all modules."""


class SDDError(Exception):
    """Base class for package errors."""


class ArgumentError(SDDError, ValueError):
    """An argument violates an operation's precondition."""


class NumericIntegrityError(SDDError, ArithmeticError):
    """Non-finite values or a violated numeric invariant."""


class SolverFailure(SDDError, RuntimeError):
    """The decomposition produced a non-finite iterate.

    The partial trace recorded up to the failure is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UndefinedMetricError(SDDError, ZeroDivisionError):
    """A ratio metric has a zero denominator."""


class SceneSpecError(SDDError, ValueError):
    """A synthetic scene recipe cannot be realized."""


class SequenceIOError(SDDError, OSError):
    """A sequence file or directory cannot be read."""
