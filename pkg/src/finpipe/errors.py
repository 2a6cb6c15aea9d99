"""Exception types used across the toolkit, one per failure category."""


class ToolkitError(Exception):
    """Base class for every error this package raises on bad data or usage."""


class IngestError(ToolkitError):
    """CSV ingestion failed: missing file, bad header, gaps, or bad cells."""


class SplitError(ToolkitError):
    """Chronological split is impossible or produces an empty partition."""


class WindowError(ToolkitError):
    """Series too short for the requested window, or bad window parameters."""


class TransformError(ToolkitError):
    """Price/volume transform applied to values outside its domain."""


class MetricError(ToolkitError):
    """Forecast metric evaluated on an empty or malformed batch."""


class DegenerateDispersionError(MetricError):
    """Cross-sample dispersion is zero, so the stability ratio is undefined."""


class PricingError(ToolkitError):
    """Option pricing inputs outside the model domain."""


class NoImpliedVolError(PricingError):
    """Market price violates no-arbitrage bounds; no implied vol exists."""


class ConvergenceError(PricingError):
    """Implied-vol root search exhausted its iteration budget."""


class FormatError(ToolkitError):
    """Structured file (forecasts, anchors, tables) violates its schema."""


class AlignError(ToolkitError):
    """Forecast data does not line up with the truth windows it targets."""


class SignalError(ToolkitError):
    """Trading signal construction failed (missing variable, short series)."""


class StrategyError(ToolkitError):
    """Position construction or equity compounding received bad inputs."""


class StatsError(ToolkitError):
    """A strategy statistic is undefined for the given return series."""
