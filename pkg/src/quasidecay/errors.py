"""Exception hierarchy shared by all modules.

Configuration problems derive from :class:`InvalidArgument` (CLI exit code 2);
numerical breakdowns derive from :class:`NumericalFailure` (exit code 3).
"""


class QuasiDecayError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(QuasiDecayError, ValueError):
    """A precondition on an input was violated."""


class NumericalFailure(QuasiDecayError, RuntimeError):
    """A computation could not produce a trustworthy result."""


class BracketInvalid(NumericalFailure):
    """Both ends of a shooting bracket fall on the same side."""


class ConvergenceFailure(NumericalFailure):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ContractionFailure(ConvergenceFailure):
    """Picard iteration left the ball or ran out of iterations."""


class InconsistentProfile(NumericalFailure):
    """A computed profile contradicts a property it must have."""


class DivergentIntegral(NumericalFailure):
    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


class SolverDegeneracy(NumericalFailure):
    """Homogeneous solutions failed to span the solution space."""


class PositivityViolation(NumericalFailure):
    """A quantity that must stay positive went negative."""


class DegenerateFit(NumericalFailure):
    """A log-log fit received zero or non-finite data."""


class PotentialSpecViolation(InvalidArgument):
    """A potential does not obey its declared decay class."""
