"""Financial time-series forecasting evaluation toolkit.

Preprocessing of price/volume panels, forecast-quality metrics including
rank-correlation scores, Black-Scholes option analytics, signal-driven
backtesting, and strategy statistics, with forecasts from external models
ingested through a simple file format.
"""

__version__ = "0.1.0"

from .errors import (
    AlignError,
    ConvergenceError,
    DegenerateDispersionError,
    FormatError,
    IngestError,
    MetricError,
    NoImpliedVolError,
    PricingError,
    SignalError,
    SplitError,
    StatsError,
    StrategyError,
    ToolkitError,
    TransformError,
    WindowError,
)
from .frame import (
    Panel,
    SplitSpec,
    Window,
    WindowSet,
    WindowSpec,
    chronological_split,
    load_csv,
    sliding_windows,
    write_csv,
)
from .preprocess import (
    TransformState,
    VariableTransform,
    cross_variable_delta,
    inverse_price_transform,
    inverse_transform_panel,
    inverse_volume_transform,
    load_anchor_file,
    log_price_transform,
    log_volume_transform,
    transform_panel,
    write_anchor_file,
)
from .metrics import ForecastBatch, mae, ms_ic, ms_ir, mse, per_pair_corr, per_sample_ic
from .options import (
    GreeksBundle,
    OptionQuote,
    bs_price,
    greeks,
    historical_vol,
    implied_vol,
)
from .forecast import load_forecasts, make_batch, naive_forecast, read_metadata, write_forecasts
from .strategy import (
    EquityCurve,
    PositionSeries,
    diff_in_diff,
    difference_signal,
    equity_curve,
    forward_returns,
    long_short_positions,
    portfolio_topk,
    timing_positions,
)
from .stats import (
    StrategyReport,
    annual_return,
    annual_volatility,
    calmar,
    cumulative_return,
    full_report,
    max_drawdown,
    omega,
    periods_per_year_for,
    sharpe,
    sortino,
    stability,
)

__all__ = [name for name in dir() if not name.startswith("_")]
