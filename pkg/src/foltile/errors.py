"""Exception hierarchy shared by all foltile modules.

The CLI maps these onto exit codes: VerificationFailure -> 1,
InvalidInput -> 2, InfeasibleParameters -> 3.
"""


class FoltileError(Exception):
    """Base class for all foltile errors."""


class InvalidInput(FoltileError):
    """Malformed configuration, file, or argument."""


class InfeasibleParameters(FoltileError):
    """A quantitative precondition cannot be met (names the inequality)."""


class VerificationFailure(FoltileError):
    """A postcondition or certificate check failed; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
