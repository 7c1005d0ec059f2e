# digests/exceptions.py


class DigestError(Exception):
    """Base class for every q-digest failure."""


class DigestDomainError(DigestError, ValueError):
    """An argument falls outside the domain an operation accepts."""


class DigestOverflowError(DigestError, OverflowError):
    """A bucket count or total no longer fits the 64-bit counter capacity."""


class DigestDecodeError(DigestError):
    """
    Raised when a byte sequence is not a well-formed digest encoding.

    `field` names the header or payload element that failed and `offset` is the
    byte position where it starts, so callers can point at the damage.
    """

    def __init__(self, field, offset, message):
        self.field = field
        self.offset = offset
        super().__init__(f'{field} at byte {offset}: {message}')
