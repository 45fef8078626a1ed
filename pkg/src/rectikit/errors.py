"""Exception hierarchy shared by every module."""


class DomainError(ValueError):
    """Input outside an operation's domain (empty sets, bad shapes, out-of-range parameters)."""


class ShapeError(DomainError):
    pass


class PreconditionError(ValueError):
    """A documented precondition of a construction does not hold; the operation refuses to run."""


class SolverError(RuntimeError):
    """The LP backend failed or returned a solution that does not pass residual checks."""
