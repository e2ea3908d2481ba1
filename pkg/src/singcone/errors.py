"""Exception types shared by all solvers."""


class SingconeError(Exception):
    """Base class for package errors."""


class DomainError(SingconeError, ValueError):
    """An input lies outside the range where the construction is defined."""


class SolverFailure(SingconeError, RuntimeError):
    """A numerical solve did not converge or produced an inadmissible result.

    ``diagnostics`` carries whatever the solver knew at the time of failure
    (brackets, residual histories, contraction factors).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
