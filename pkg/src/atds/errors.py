"""Exception hierarchy shared across the toolkit."""


class AtdsError(Exception):
    """Base class for all toolkit errors."""


class FormatError(AtdsError):
    """A file on disk does not conform to its documented format."""


class ValidationError(AtdsError):
    """An argument or in-memory object violates a precondition."""


class InsufficientDataError(AtdsError):
    """A sampling or training request exceeds the available data."""


class FingerprintMismatchError(AtdsError):
    """Two artifacts were produced with different vocabularies."""
