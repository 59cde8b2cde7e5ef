"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so keep the tree shallow.
"""


class OqsimError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(OqsimError, ValueError):
    """Argument violates a documented precondition."""


class NumericError(OqsimError, ArithmeticError):
    """A numerical procedure failed or produced an invalid state."""


class CapabilityError(OqsimError):
    """Request is outside what the dense implementation supports."""


class ParseError(InvalidArgumentError):
    """Lexical or syntax error in an operator expression."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class SemanticError(InvalidArgumentError):
    """Expression is well formed but refers to unknown names or sites."""


class ImpossibleOutcomeError(OqsimError, ValueError):
    """Requested measurement outcome has (numerically) zero probability."""


class NotASymmetryError(OqsimError, ValueError):
    """Supplied unitary does not commute with the Liouvillian."""
