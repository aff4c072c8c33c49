"""Exception hierarchy shared across the package."""


class RumidasError(Exception):
    """Base class for all errors raised by this package."""


class AlignmentError(RumidasError):
    """Monthly-to-daily release alignment cannot be performed."""


class InterpolationError(RumidasError):
    """Gap filling failed (gap at a trading date, or extrapolation needed)."""


class SpecError(RumidasError):
    """A model specification or dimension contract is violated."""


class DesignError(RumidasError):
    """The regression design cannot be built from the supplied data/window."""


class WindowError(RumidasError):
    """An estimation window contains a data gap or lies outside coverage."""


class NumericalError(RumidasError):
    """A linear-algebra step failed numerically (e.g. non-SPD posterior)."""


class ScoreError(RumidasError):
    """Forecast scoring inputs are invalid (no realizations, misalignment)."""


class ConfigError(RumidasError):
    """Run configuration is invalid."""
