"""Exception types raised across the package."""


class QkdlabError(Exception):
    """Base class for all package errors."""


class DomainError(QkdlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class NoSignalError(QkdlabError, ValueError):
    """The signal gain is zero, so a key-rate ratio is undefined."""


class NoThresholdError(QkdlabError, RuntimeError):
    """No sign change of the threshold equation inside the search bracket."""


class UnattainableError(QkdlabError, ValueError):
    """A requested target cannot be reached by any admissible parameter."""
