"""Exception hierarchy shared by all modules."""


class MarczError(Exception):
    """Base class for library errors."""


class PreconditionError(MarczError, ValueError):
    """An input violates the documented precondition of an operation."""


class RankDeficiencyError(MarczError):
    """A basis matrix is numerically rank deficient under the space weights."""


class InvariantError(MarczError, AssertionError):
    """A computed object failed a self-check (signals a bug or corrupt input)."""


class ConvergenceError(MarczError):
    """An iteration did not converge; ``residual`` holds the last residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SupportCollapseError(ConvergenceError):
    """The density support shrank below the subspace dimension."""


class NetTooCoarseError(MarczError):
    """Net transfer left a non-positive lower constant; shrink the net radius."""


class BudgetExhaustedError(MarczError):
    """No candidate passed screening; the best attempt is attached."""

    def __init__(self, message, plan=None, certificate=None):
        super().__init__(message)
        self.plan = plan
        self.certificate = certificate


class CheckFailed(MarczError, AssertionError):
    """An empirical consistency check failed; ``report`` holds the evidence."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
