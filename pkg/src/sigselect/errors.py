"""Exception hierarchy shared across the package.

Bad command-line usage raises plain ValueError; everything that stems from
the *content* of data (files, matrices, labels) derives from SigSelectError
so the CLI can map it to a data-error exit code.
"""


class SigSelectError(Exception):
    """Base class for data and algorithm errors raised by sigselect."""


class FormatError(SigSelectError):
    """File does not follow the expected on-disk structure."""


class TruncationError(FormatError):
    """Declared sizes require more bytes than the file contains."""


class DataError(SigSelectError):
    """Values violate a dataset invariant (non-finite, bad label, empty class)."""


class DomainError(SigSelectError):
    """Input lies outside an operation's mathematical domain."""


class DegenerateInputError(SigSelectError):
    """Input is structurally too small for the operation (single class, n < 2)."""
