"""Exception types. Every error carries a machine-readable ``code``."""


class WebsterError(Exception):
    code = "WebsterError"


class EmptySpectrum(WebsterError):
    code = "EmptySpectrum"


class MismatchedGrid(WebsterError):
    code = "MismatchedGrid"


class GridMismatch(WebsterError):
    code = "GridMismatch"


class PoleAtBin(WebsterError):
    code = "PoleAtBin"


class NoConvergence(WebsterError):
    code = "NoConvergence"


class NonPositiveZ0(WebsterError):
    code = "NonPositiveZ0"


class WavefrontLost(WebsterError):
    code = "WavefrontLost"


class EmptyInterval(WebsterError):
    code = "EmptyInterval"


class NoMinimumFound(WebsterError):
    code = "NoMinimumFound"


class EmptyAreaFunction(WebsterError):
    code = "EmptyAreaFunction"


class TerminationBeyondArea(WebsterError):
    code = "TerminationBeyondArea"


class DegenerateFit(WebsterError):
    code = "DegenerateFit"


class InsufficientGroups(WebsterError):
    code = "InsufficientGroups"


class ConfigError(WebsterError):
    code = "ConfigError"


class ParseError(WebsterError):
    """Malformed input file; ``line`` is 1-based when known."""

    code = "ParseError"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
