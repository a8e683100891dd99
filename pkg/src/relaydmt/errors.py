"""Exception hierarchy shared by every module."""


class RelayDMTError(Exception):
    pass


class ValidationError(RelayDMTError, ValueError):
    """Malformed input: out-of-box values, bad expression trees, bad grids."""


class DomainError(RelayDMTError, ValueError):
    """A formula or solver was called outside the regime where it holds."""


class UnsupportedConfigurationError(DomainError):
    """Configuration the library deliberately does not cover (e.g. a != b)."""


class InsufficientDataError(RelayDMTError):
    """Too few usable points for a slope fit.

    ``dropped`` lists the SNR values that were excluded and why.
    """

    def __init__(self, message, dropped=()):
        super().__init__(message)
        self.dropped = list(dropped)
