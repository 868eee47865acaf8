"""Exception hierarchy shared by all bernrdp modules."""


class BernRdpError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BernRdpError, ValueError):
    """An input violates its documented domain (beyond tolerance)."""


class ConvergenceError(BernRdpError, RuntimeError):
    """A multiplier search failed to reach the requested residual."""


class SizeError(BernRdpError, ValueError):
    """A brute-force oracle was asked for a problem size it does not support."""
