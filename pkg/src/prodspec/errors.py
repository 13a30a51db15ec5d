"""Exception types shared across the package."""


class ProdspecError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(ProdspecError, ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class ContractError(ProdspecError, ValueError):
    """A call violated an operation's precondition."""


class NumericError(ProdspecError, ArithmeticError):
    """A numerical routine failed to converge or lost accuracy.

    ``diagnostics`` carries whatever partial state the routine could report.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class OracleGuardError(ContractError):
    """The brute-force oracle refuses a problem that is too large."""
