"""Exception types shared across the toolkit.

Plain ``ValueError`` is used for ordinary bad arguments (non-positive
spacing, wrong lengths, ...); the classes here mark domain conditions a
caller may want to catch individually.
"""


class SurfImputeError(Exception):
    """Base class for all toolkit-specific errors."""


class EmptyDatasetError(SurfImputeError):
    """An operation needed at least one valid point and found none."""


class NoProfileElementsError(SurfImputeError):
    """Fewer than two qualified mean-line crossings: Rsm is undefined."""


class MustImputeFirstError(SurfImputeError):
    """The operation requires a complete profile (no missing heights)."""


class NothingToImputeError(SurfImputeError):
    """The profile has no missing heights to fill."""


class NotPositiveDefiniteError(SurfImputeError):
    """Cholesky failed at every jitter level on the escalation ladder."""


class CoverageError(SurfImputeError):
    """A local interpolator found no valid support for some point."""


class PartialFillError(SurfImputeError):
    """A pass-limited filler left points unfilled.

    ``remaining`` holds the indices that are still missing.
    """

    def __init__(self, message, remaining):
        super().__init__(message)
        self.remaining = list(remaining)


class InsufficientFeaturesError(SurfImputeError):
    """Fewer surface features (dales) than the mask requested."""


class FitFailureError(SurfImputeError):
    """Hyperparameter optimization failed; carries the last finite iterate.

    ``model`` is the best model found before failure (may be None when
    not even the start point evaluated to a finite objective).
    """

    def __init__(self, message, model=None, trace=None):
        super().__init__(message)
        self.model = model
        self.trace = trace


class StaleWhiteningError(SurfImputeError):
    """A whitening state was used with hyperparameters it was not built for."""


class GridMismatchError(SurfImputeError):
    """Two profiles that must share an abscissa grid do not."""


class ConfigError(SurfImputeError):
    """A config or data file failed to parse; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
