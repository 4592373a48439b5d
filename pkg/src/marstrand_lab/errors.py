"""Exception hierarchy.

Precondition failures (bad input, resolution floors, budgets) map to CLI exit
code 2; numerical solver failures map to exit code 3.
"""


class MarstrandError(Exception):
    exit_code = 2

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class PreconditionError(MarstrandError, ValueError):
    pass


class DomainError(PreconditionError):
    """A point lies outside the valid region of its metric context."""


class ResolutionError(PreconditionError):
    """A scale requested below what the discrete object can resolve."""


class DegenerateInputError(PreconditionError):
    """Coincident points or other degenerate configurations."""


class SizeError(PreconditionError):
    """A generation budget was exceeded."""


class DegenerateFitError(PreconditionError):
    """Too few usable scales or cells for a log-log fit."""


class InfiniteEnergyError(PreconditionError):
    """Distinct atoms at distance zero make an s-energy infinite."""


class SolverError(MarstrandError, RuntimeError):
    exit_code = 3
