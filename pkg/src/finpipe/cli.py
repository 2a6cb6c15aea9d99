"""Command-line pipeline: preprocess, split, forecast, evaluate, backtest, report.

Every subcommand validates its inputs fully before writing anything, writes
deterministic bytes for a given (inputs, flags, seed), and stamps each output
file with a provenance header: a hash of the semantic configuration, the
seed, and the toolkit version. An optional ``key=value`` config file can
supply any option; explicit flags win on conflict. Exit status is 0 on
success, 1 on data errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DegenerateDispersionError,
    FormatError,
    MetricError,
    SignalError,
    StrategyError,
    ToolkitError,
)
from .forecast import load_forecasts, make_batch, naive_forecast, read_metadata, write_forecasts
from .frame import Panel, SplitSpec, WindowSpec, chronological_split, load_csv, sliding_windows, write_csv
from .metrics import mae, ms_ic, ms_ir, mse
from .options import OptionQuote, greeks, historical_vol, implied_vol
from .preprocess import inverse_price_transform, load_anchor_file, transform_panel, write_anchor_file
from .stats import full_report, periods_per_year_for
from .strategy import (
    EquityCurve,
    diff_in_diff,
    difference_signal,
    equity_curve,
    forward_returns,
    long_short_positions,
    portfolio_topk,
    timing_positions,
)


def derive_seed(seed: int, stream: str) -> int:
    """Per-module sub-seed from one master seed and a stream name."""
    digest = hashlib.sha256(f"{seed}:{stream}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _csv_tuple(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in str(text).split(",") if part.strip())


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Opt:
    name: str
    convert: object
    default: object = None
    required: bool = False
    flag: bool = False
    choices: tuple | None = None
    help: str = ""


_COMMON = (
    Opt("config", str, help="key=value file supplying defaults; flags win on conflict"),
    Opt("threads", int, default=1, help="upper bound on worker threads; results never depend on it"),
)

_FREQ = Opt("freq", str, default="daily", choices=("daily", "hourly", "minutely"),
            help="panel frequency label")

OPTIONS: dict[str, tuple[Opt, ...]] = {
    "preprocess": (
        Opt("input", str, required=True, help="raw OHLCV panel CSV"),
        Opt("output", str, required=True, help="transformed panel CSV"),
        Opt("anchors", str, required=True, help="sidecar anchor CSV enabling exact inversion"),
        Opt("baseline", float, default=100.0, help="additive baseline for log prices"),
        _FREQ,
        *_COMMON,
    ),
    "split": (
        Opt("input", str, required=True, help="panel CSV to partition"),
        Opt("output_dir", str, required=True, help="directory for train/val/test CSVs"),
        Opt("train", float, default=0.7, help="train fraction"),
        Opt("val", float, default=0.1, help="validation fraction"),
        Opt("test", float, default=0.2, help="test fraction"),
        _FREQ,
        *_COMMON,
    ),
    "naive-forecast": (
        Opt("input", str, required=True, help="transformed panel CSV"),
        Opt("output", str, required=True, help="forecast file to write"),
        Opt("input_len", int, default=512, help="window input length"),
        Opt("horizon", int, default=5, help="forecast horizon"),
        Opt("target_vars", _csv_tuple, default=(), help="comma-separated targets; empty = all"),
        Opt("task", str, default="m2m", choices=("m2m", "m2s", "m2p"),
            help="m2m: all variables, m2s: one target, m2p: a proper subset"),
        Opt("noise_std", float, default=0.001, help="gaussian noise std on predictions"),
        Opt("seed", int, default=0, help="master seed; sub-seeds are derived per stream"),
        Opt("shared_noise", _parse_bool, default=False, flag=True,
            help="share one noise draw across the horizon instead of redrawing per step"),
        _FREQ,
        *_COMMON,
    ),
    "evaluate": (
        Opt("truth", str, required=True, help="transformed panel CSV with the ground truth"),
        Opt("forecasts", str, required=True, help="forecast file to score"),
        Opt("output", str, required=True, help="metric,value CSV"),
        Opt("method", str, default="spearman", choices=("spearman", "pearson"),
            help="correlation flavor for msic/msir"),
        _FREQ,
        *_COMMON,
    ),
    "backtest": (
        Opt("forecasts", str, required=True, help="forecast file driving the signals"),
        Opt("panel", str, required=True, help="transformed panel CSV (model input space)"),
        Opt("anchors", str, required=True, help="anchor sidecar from preprocess"),
        Opt("output", str, required=True, help="equity curve CSV"),
        Opt("strategy", str, required=True, choices=("timing", "longshort", "topk"),
            help="position rule"),
        Opt("target_var", str, help="traded variable (timing/longshort)"),
        Opt("k", int, help="portfolio size (topk)"),
        Opt("window", int, default=63, help="rolling-mean window of the trigger signal"),
        Opt("rebalance", int, default=5, help="periods between position updates"),
        _FREQ,
        *_COMMON,
    ),
    "report": (
        Opt("input", str, required=True, help="equity curve CSV from backtest"),
        Opt("output", str, required=True, help="metric,value CSV"),
        Opt("periods_per_year", float, help="annualization factor; default follows --freq"),
        Opt("risk_free", float, default=0.0, help="annual risk-free rate"),
        _FREQ,
        *_COMMON,
    ),
    "option-analytics": (
        Opt("input", str, required=True,
            help="CSV of timestamp,spot,strike,rate,expiry,kind,market_price"),
        Opt("output", str, required=True, help="input rows extended with iv and greeks"),
        Opt("hv_window", int, help="prices per historical-volatility window (adds an hv column)"),
        Opt("hv_source", str, default="market_price", help="column feeding historical volatility"),
        *_COMMON,
    ),
}

# Keys that define a run's semantics; paths and the thread cap stay out so
# identical runs in different locations hash identically.
HASH_KEYS: dict[str, tuple[str, ...]] = {
    "preprocess": ("baseline", "freq"),
    "split": ("train", "val", "test", "freq"),
    "naive-forecast": ("input_len", "horizon", "target_vars", "task", "noise_std",
                       "seed", "shared_noise", "freq"),
    "evaluate": ("method", "freq"),
    "backtest": ("strategy", "target_var", "k", "window", "rebalance", "freq"),
    "report": ("periods_per_year", "risk_free", "freq"),
    "option-analytics": ("hv_window", "hv_source"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finpipe",
        description="Financial time-series forecasting evaluation pipeline",
    )
    parser.add_argument("--version", action="version", version=f"finpipe {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, opts in OPTIONS.items():
        sub = subparsers.add_parser(command, help=f"{command} stage")
        for opt in opts:
            flag = "--" + opt.name.replace("_", "-")
            if opt.flag:
                sub.add_argument(flag, dest=opt.name, action="store_true",
                                 default=argparse.SUPPRESS, help=opt.help)
            else:
                sub.add_argument(flag, dest=opt.name, type=str,
                                 default=argparse.SUPPRESS, help=opt.help)
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise FormatError(f"no such config file: {cfg_path}")
    values: dict[str, str] = {}
    for n, line in enumerate(cfg_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{cfg_path}: line {n}: expected key=value, got {line!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_options(parser, command: str, namespace) -> dict:
    """Layer defaults, config-file values, then explicit flags; validate."""
    opts = {o.name: o for o in OPTIONS[command]}
    merged = {o.name: o.default for o in OPTIONS[command]}
    explicit = {k: v for k, v in vars(namespace).items() if k != "command"}

    config_path = explicit.get("config")
    if config_path is not None:
        try:
            raw = _load_config_file(config_path)
        except FormatError as exc:
            parser.error(str(exc))
        for key, text in raw.items():
            if key not in opts or key == "config":
                parser.error(f"config file sets unknown option {key!r} for {command}")
            try:
                merged[key] = opts[key].convert(text)
            except (TypeError, ValueError):
                parser.error(f"config option {key}={text!r} is not a valid value")

    for key, text in explicit.items():
        if key == "config":
            merged[key] = text
            continue
        opt = opts[key]
        if opt.flag:
            merged[key] = bool(text)
            continue
        try:
            merged[key] = opt.convert(text)
        except (TypeError, ValueError):
            parser.error(f"option --{key.replace('_', '-')}={text!r} is not a valid value")

    for opt in OPTIONS[command]:
        if opt.required and merged[opt.name] is None:
            parser.error(f"missing required option --{opt.name.replace('_', '-')}")
        if opt.choices is not None and merged[opt.name] is not None \
                and merged[opt.name] not in opt.choices:
            parser.error(
                f"--{opt.name.replace('_', '-')} must be one of {opt.choices}, "
                f"got {merged[opt.name]!r}"
            )
    if merged.get("threads") is not None and merged["threads"] < 1:
        parser.error("--threads must be >= 1")
    if command == "split":
        for key in ("train", "val", "test"):
            if not 0.0 < merged[key] < 1.0:
                parser.error(f"--{key} must be in (0, 1), got {merged[key]}")
        if abs(merged["train"] + merged["val"] + merged["test"] - 1.0) > 1e-12:
            parser.error("split fractions must sum to 1")
    if command == "naive-forecast":
        if merged["input_len"] < 1 or merged["horizon"] < 1:
            parser.error("--input-len and --horizon must be >= 1")
        if merged["noise_std"] < 0:
            parser.error("--noise-std must be non-negative")
    if command == "backtest":
        if merged["strategy"] in ("timing", "longshort") and not merged["target_var"]:
            parser.error(f"--target-var is required for the {merged['strategy']} strategy")
        if merged["strategy"] == "topk" and merged["k"] is None:
            parser.error("--k is required for the topk strategy")
        if merged["window"] < 1 or merged["rebalance"] < 1:
            parser.error("--window and --rebalance must be >= 1")
    if command == "report":
        if merged["periods_per_year"] is None:
            default = periods_per_year_for(merged["freq"])
            if default is None:
                parser.error(f"--periods-per-year is required for freq {merged['freq']!r}")
            merged["periods_per_year"] = float(default)
        if merged["periods_per_year"] <= 0:
            parser.error("--periods-per-year must be positive")
    if command == "option-analytics" and merged["hv_window"] is not None \
            and merged["hv_window"] < 2:
        parser.error("--hv-window must be >= 2")
    return merged


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def provenance_lines(command: str, opts: dict) -> list[str]:
    blob = ";".join(f"{k}={_format_value(opts.get(k))}" for k in HASH_KEYS[command])
    config_hash = hashlib.sha256(blob.encode()).hexdigest()[:16]
    seed = _format_value(opts.get("seed"))
    return [f"#config_hash={config_hash}", f"#seed={seed}", f"#version={__version__}"]


def _write_lines(path, lines) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    """Non-panel CSV reader: header plus string rows, comments skipped."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise FormatError(f"{path}: empty file")
    return [c.strip() for c in rows[0]], rows[1:]


def _table_floats(path, header, rows, column: str) -> np.ndarray:
    idx = header.index(column)
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        try:
            out[i] = float(row[idx])
        except (ValueError, IndexError):
            raise FormatError(
                f"{path}: row {i + 2}: bad value in column {column!r}"
            ) from None
    return out


def cmd_preprocess(opts: dict) -> None:
    panel = load_csv(opts["input"], freq=opts["freq"])
    transformed, records = transform_panel(panel, baseline=opts["baseline"])
    stamp = provenance_lines("preprocess", opts)
    write_csv(transformed, opts["output"], header_comments=stamp)
    write_anchor_file(opts["anchors"], records, header_comments=stamp)


def cmd_split(opts: dict) -> None:
    panel = load_csv(opts["input"], freq=opts["freq"])
    spec = SplitSpec(opts["train"], opts["val"], opts["test"])
    train, val, test = chronological_split(panel, spec)
    stamp = provenance_lines("split", opts)
    out_dir = Path(opts["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("val", val), ("test", test)):
        write_csv(part, out_dir / f"{name}.csv", header_comments=stamp)


def cmd_naive_forecast(opts: dict) -> None:
    panel = load_csv(opts["input"], freq=opts["freq"])
    targets = opts["target_vars"]
    task = opts["task"]
    n_all = panel.n_vars
    n_targets = len(targets) if targets else n_all
    if task == "m2s" and n_targets != 1:
        raise SignalError(f"task m2s needs exactly one target variable, got {n_targets}")
    if task == "m2p" and not 1 <= n_targets < n_all:
        raise SignalError(
            f"task m2p needs a proper subset of the {n_all} variables, got {n_targets}"
        )
    windows = sliding_windows(panel, WindowSpec(opts["input_len"], opts["horizon"], targets))
    preds = naive_forecast(
        windows,
        opts["horizon"],
        noise_std=opts["noise_std"],
        seed=derive_seed(opts["seed"], "naive-forecast"),
        redraw_per_step=not opts["shared_noise"],
    )
    batch = make_batch(windows, preds)
    write_forecasts(
        opts["output"], batch, input_len=opts["input_len"], model="naive",
        header_comments=provenance_lines("naive-forecast", opts),
    )


def _windows_for_forecast_file(panel: Panel, forecast_path) -> "WindowSpec":
    meta = read_metadata(forecast_path)
    if "L" not in meta or "H" not in meta:
        raise FormatError(f"{forecast_path}: forecast file lacks #L/#H headers")
    targets = meta.get("variables", ())
    return WindowSpec(meta["L"], meta["H"], tuple(targets))


def cmd_evaluate(opts: dict) -> None:
    panel = load_csv(opts["truth"], freq=opts["freq"])
    spec = _windows_for_forecast_file(panel, opts["forecasts"])
    windows = sliding_windows(panel, spec)
    batch = load_forecasts(opts["forecasts"], windows)
    rows = [("mse", repr(mse(batch))), ("mae", repr(mae(batch)))]
    try:
        rows.append(("msic", repr(ms_ic(batch, opts["method"]))))
        rows.append(("msir", repr(ms_ir(batch, opts["method"]))))
    except DegenerateDispersionError:
        rows.append(("msir", "NA"))
    except MetricError:
        # horizon of 1: correlation metrics are undefined
        rows.append(("msic", "NA"))
        rows.append(("msir", "NA"))
    lines = provenance_lines("evaluate", opts) + ["metric,value"]
    lines.extend(f"{name},{value}" for name, value in rows)
    _write_lines(opts["output"], lines)


def cmd_backtest(opts: dict) -> None:
    panel = load_csv(opts["panel"], freq=opts["freq"])
    records = {r.variable: r for r in load_anchor_file(opts["anchors"])}
    spec = _windows_for_forecast_file(panel, opts["forecasts"])
    windows = sliding_windows(panel, spec)
    batch = load_forecasts(opts["forecasts"], windows)

    signal = difference_signal(batch)
    dd = diff_in_diff(signal, opts["window"])

    for var in signal.variables:
        rec = records.get(var)
        if rec is None:
            raise StrategyError(f"anchor file has no record for variable {var!r}")
        if rec.kind != "price":
            raise StrategyError(f"variable {var!r} is {rec.kind}, not a tradeable price")
    raw_prices = np.column_stack(
        [inverse_price_transform(panel.column(v), records[v].state()) for v in signal.variables]
    )
    raw_panel = Panel(panel.timestamps, signal.variables, raw_prices, panel.freq)

    origin_rows = windows.origin_indices[batch.sample_order][opts["window"] - 1 :]
    returns = forward_returns(raw_panel, signal.variables, origin_rows)

    strategy = opts["strategy"]
    if strategy == "topk":
        positions = portfolio_topk(dd, opts["k"], opts["rebalance"])
        traded_returns = returns
    else:
        target = opts["target_var"]
        if target not in dd.variables:
            raise SignalError(f"no target variable {target!r} among forecast variables")
        dd_one = dd.select([target])
        traded_returns = returns.select([target])
        if strategy == "timing":
            positions = timing_positions(dd_one, opts["rebalance"])
        else:
            positions = long_short_positions(dd_one, opts["rebalance"])
    curve = equity_curve(positions, traded_returns)

    lines = provenance_lines("backtest", opts)
    lines.append("timestamp,net_value,period_return,position")
    for i, label in enumerate(curve.timestamps):
        if strategy == "topk":
            held = [a for a, w in zip(positions.assets, positions.weights[i]) if w > 0]
            position = "|".join(held)
        else:
            position = repr(float(positions.weights[i, 0]))
        lines.append(
            f"{label},{repr(float(curve.net_values[i]))},"
            f"{repr(float(curve.period_returns[i]))},{position}"
        )
    _write_lines(opts["output"], lines)


def cmd_report(opts: dict) -> None:
    header, rows = _read_table(opts["input"])
    for column in ("timestamp", "net_value", "period_return"):
        if column not in header:
            raise FormatError(f"{opts['input']}: curve file lacks column {column!r}")
    if not rows:
        raise FormatError(f"{opts['input']}: curve file has no rows")
    ts_idx = header.index("timestamp")
    timestamps = tuple(row[ts_idx].strip() for row in rows)
    net = _table_floats(opts["input"], header, rows, "net_value")
    rets = _table_floats(opts["input"], header, rows, "period_return")
    curve = EquityCurve(timestamps, rets, net)
    report = full_report(curve, opts["periods_per_year"], opts["risk_free"])
    lines = provenance_lines("report", opts) + ["metric,value"]
    for name, value in report.rows():
        lines.append(f"{name},{'NA' if value is None else repr(float(value))}")
    _write_lines(opts["output"], lines)


def cmd_option_analytics(opts: dict) -> None:
    header, rows = _read_table(opts["input"])
    required = ("timestamp", "spot", "strike", "rate", "expiry", "kind", "market_price")
    missing = [c for c in required if c not in header]
    if missing:
        raise FormatError(f"{opts['input']}: quote file lacks column(s) {missing}")
    if not rows:
        raise FormatError(f"{opts['input']}: quote file has no rows")
    spot = _table_floats(opts["input"], header, rows, "spot")
    strike = _table_floats(opts["input"], header, rows, "strike")
    rate = _table_floats(opts["input"], header, rows, "rate")
    expiry = _table_floats(opts["input"], header, rows, "expiry")
    price = _table_floats(opts["input"], header, rows, "market_price")
    kind_idx = header.index("kind")

    extended = []
    for i, row in enumerate(rows):
        kind = row[kind_idx].strip().lower()
        quote = OptionQuote(spot[i], strike[i], rate[i], expiry[i], kind, price[i])
        iv = implied_vol(quote)
        g = greeks(quote, iv)
        extended.append([iv, g.delta, g.theta, g.gamma, g.vega, g.rho_rate])

    hv_column = None
    if opts["hv_window"] is not None:
        source = opts["hv_source"]
        if source not in header:
            raise FormatError(f"{opts['input']}: no hv source column {source!r}")
        series = _table_floats(opts["input"], header, rows, source)
        hv = historical_vol(series, opts["hv_window"])
        hv_column = [""] * (opts["hv_window"] - 1) + [repr(float(v)) for v in hv]

    out_header = header + ["iv", "delta", "theta", "gamma", "vega", "rho"]
    if hv_column is not None:
        out_header.append("hv")
    lines = provenance_lines("option-analytics", opts)
    lines.append(",".join(out_header))
    for i, row in enumerate(rows):
        cells = [c.strip() for c in row] + [repr(float(v)) for v in extended[i]]
        if hv_column is not None:
            cells.append(hv_column[i])
        lines.append(",".join(cells))
    _write_lines(opts["output"], lines)


COMMANDS = {
    "preprocess": cmd_preprocess,
    "split": cmd_split,
    "naive-forecast": cmd_naive_forecast,
    "evaluate": cmd_evaluate,
    "backtest": cmd_backtest,
    "report": cmd_report,
    "option-analytics": cmd_option_analytics,
}


def main(argv=None) -> int:
    parser = build_parser()
    namespace = parser.parse_args(argv)
    opts = resolve_options(parser, namespace.command, namespace)
    try:
        COMMANDS[namespace.command](opts)
    except ToolkitError as exc:
        print(f"finpipe {namespace.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
