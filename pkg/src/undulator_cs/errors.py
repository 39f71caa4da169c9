"""Exception hierarchy shared by all modules."""


class UndulatorError(Exception):
    """Base class for every error raised by this package."""


class DomainError(UndulatorError, ValueError):
    """An argument lies outside the domain of the requested formula."""


class ConfigError(UndulatorError, ValueError):
    """Invalid run configuration.

    ``line`` is the 1-based line of the offending entry when the error comes
    from parsing config text, otherwise ``None``.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OverflowBoundError(UndulatorError, OverflowError):
    """A coherent-state eigenvalue exceeded the configured magnitude bound."""


class StitchError(UndulatorError, RuntimeError):
    """The boundary-matching system could not be solved."""


class ResolutionError(UndulatorError):
    """A grid is too coarse for the requested stencil accuracy."""


class AccuracyError(UndulatorError):
    """A grid quadrature failed its normalization sanity check."""
