"""Exception hierarchy shared by all engine modules."""


class BKError(Exception):
    """Base class for every error raised by the engine."""


class UsageError(BKError):
    """Caller supplied inconsistent or malformed arguments."""


class DomainError(BKError):
    """A requested operation is undefined on the given input.

    ``remainder`` carries the first nonzero Weierstrass remainder when the
    failure comes from a non-exact division.
    """

    def __init__(self, message, remainder=None):
        super().__init__(message)
        self.remainder = remainder


class InsufficientPrecision(BKError):
    """The answer depends on coefficients the working precision does not pin down.

    ``needed`` optionally records a precision (e.g. ``{"n_u": 17}``) that
    would make the computation conclusive.
    """

    def __init__(self, message, needed=None):
        super().__init__(message)
        self.needed = dict(needed or {})


class NotEffective(BKError):
    """The Frobenius matrix does not define an effective isogeny."""


class ConsistencyError(BKError):
    """An internal cross-check that is a theorem failed: a bug or a refuted assertion."""
