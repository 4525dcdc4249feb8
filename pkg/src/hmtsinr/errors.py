"""Exception types shared across the package."""


class HmtError(Exception):
    """Base class for all package errors."""


class ParameterError(HmtError, ValueError):
    """A physical parameter is outside its valid domain."""


class CoverageError(HmtError, ValueError):
    """A sampling grid does not cover the support it is asked to represent."""


class IncompatibleGridError(HmtError, ValueError):
    """Two sampled waveforms cannot be combined (different sample intervals)."""


class ConfigError(HmtError):
    """Invalid experiment configuration.

    ``line`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
