"""Exception types shared across the package."""


class InsufficientDataError(Exception):
    """Raised when an estimator needs more observations than it was given.

    Betting strategies catch this and emit a neutral e-value of 1.
    """


class BandwidthError(Exception):
    """Raised when plug-in bandwidth selection fails (degenerate sample)."""
