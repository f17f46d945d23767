"""Exception types shared across the package."""


class StabvoteError(Exception):
    """Base class for all errors raised by stabvote."""


class ValidationError(StabvoteError, ValueError):
    """Bad input: wrong length, out-of-range parameter, inconsistent spec."""


class TooLargeError(ValidationError):
    """The requested operation needs a dense table larger than the cap."""


class ConstantFunctionError(ValidationError):
    """Banzhaf indices are undefined because no voter is ever pivotal."""


class PreconditionError(ValidationError):
    """A theorem-check was called outside the hypothesis of the theorem."""


class ParseError(ValidationError):
    """Malformed input file. ``offset`` is a byte offset or line number."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class InvariantError(StabvoteError):
    """An internal cross-check failed. Always indicates a bug."""


class TieWarning(UserWarning):
    """A sign() argument can be exactly zero; ties are resolved to +1."""
