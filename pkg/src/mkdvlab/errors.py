"""Exception hierarchy.

Two families matter to callers: input validation failures and numerical
health failures. The command line maps them to exit codes 1 and 2.
"""


class MkdvLabError(Exception):
    """Base class for all errors raised by mkdvlab."""


class ValidationError(MkdvLabError, ValueError):
    """An input violates the precondition of the operation that received it."""


class DomainError(ValidationError):
    """A profile or soliton center does not fit inside the periodic box."""


class MeanToleranceError(ValidationError):
    """Antiderivative requested for data that is not effectively mean-zero."""


class NumericalHealthError(MkdvLabError, RuntimeError):
    """A computation finished but its result cannot be certified."""


class InertiaAmbiguityError(NumericalHealthError):
    """An eigenvalue sits too close to the zero threshold to classify."""


class ConvergenceError(NumericalHealthError):
    """An optimizer did not reach its tolerance."""


class BlowUpError(NumericalHealthError):
    """The time integrator detected uncontrolled growth of the solution."""
