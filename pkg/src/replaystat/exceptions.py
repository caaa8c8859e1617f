"""Exception types shared across the package.

Everything derives from ReplayError so callers can catch one base class.
Errors that signal bad user input also subclass ValueError; the CLI maps
those to exit code 1 and everything else to exit code 2.
"""


class ReplayError(Exception):
    """Base class for all package errors."""


class SingularSystem(ReplayError):
    """Linear system could not be solved, even after the jitter retry."""


class AllSubsamplesSingular(ReplayError):
    """Every drawn subsample was skipped; no estimate can be formed."""


class InvalidWeights(ReplayError, ValueError):
    """Sampling weights are missing, malformed, or not normalizable."""


class CapExceeded(ReplayError):
    """Requested exhaustive enumeration is larger than the safety cap."""


class TrajectoryTooShort(ReplayError, ValueError):
    """Trajectory does not contain enough transitions for the operation."""


class IndexOutOfRange(ReplayError, IndexError):
    """Step index does not admit the requested lookahead."""


class DimensionMismatch(ReplayError, ValueError):
    """Array shapes are inconsistent with the declared dimensions."""


class ParseError(ReplayError, ValueError):
    """A data file contains a malformed row.

    The offending 1-based line number is stored on ``.line``.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class EmptyFile(ReplayError, ValueError):
    """A data file contains a header but no data rows."""


class ConfigError(ReplayError, ValueError):
    """An experiment configuration failed validation."""
