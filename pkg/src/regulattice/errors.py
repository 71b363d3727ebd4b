"""Exception hierarchy shared by every module of the package."""


class RegulatticeError(Exception):
    """Base class for all errors raised by regulattice."""


class DomainError(RegulatticeError, ValueError):
    """An argument lies outside the domain of the operation."""


class NormalizationError(DomainError):
    """The matrix has zero total mass and cannot be normalized."""


class OracleLimitError(DomainError):
    """A block is too large for exhaustive regularity checking."""


class RebalanceError(DomainError):
    """Rebalancing left no nonexceptional classes."""


class ShrinkFailure(RegulatticeError):
    """A witness could not be shrunk while keeping its deviation."""


class StepRefused(RegulatticeError):
    """A refinement step was asked to run outside its hypotheses."""


class SizeError(DomainError):
    """The matrix is too small for the requested initial partition."""


class InvariantError(RegulatticeError, AssertionError):
    """A guaranteed inequality failed at runtime."""


class ParseError(RegulatticeError, ValueError):
    """An input file could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
