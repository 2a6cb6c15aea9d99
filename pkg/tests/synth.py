"""Synthetic market data builders shared by CLI, strategy, and acceptance tests."""

from pathlib import Path

import numpy as np

from finpipe import Panel


def random_walk_ohlcv(n_rows, seed, asset="X", start=100.0):
    """Positive OHLCV columns with high >= open/close >= low, plus some zero volume."""
    rng = np.random.default_rng(seed)
    close = start * np.exp(np.cumsum(rng.normal(0.0, 0.01, n_rows)))
    prev_close = np.concatenate(([start], close[:-1]))
    open_ = prev_close * np.exp(rng.normal(0.0, 0.003, n_rows))
    body_high = np.maximum(open_, close)
    body_low = np.minimum(open_, close)
    high = body_high * np.exp(np.abs(rng.normal(0.0, 0.004, n_rows)))
    low = body_low * np.exp(-np.abs(rng.normal(0.0, 0.004, n_rows)))
    volume = np.round(np.exp(rng.normal(10.0, 1.0, n_rows)))
    volume[rng.random(n_rows) < 0.02] = 0.0  # quiet sessions
    suffix = f"_{asset}" if asset else ""
    columns = {
        f"open{suffix}": open_,
        f"high{suffix}": high,
        f"low{suffix}": low,
        f"close{suffix}": close,
        f"volume{suffix}": volume,
    }
    return columns


def ohlcv_panel(n_rows, seed, assets=("X",), start=100.0):
    """One panel holding OHLCV columns for each asset."""
    columns = {}
    for i, asset in enumerate(assets):
        columns.update(random_walk_ohlcv(n_rows, seed + i, asset, start))
    names = tuple(columns)
    values = np.column_stack([columns[name] for name in names])
    return Panel(range(n_rows), names, values)


def random_walk_panel(n_rows, n_channels, seed, scale=0.01):
    """Plain random-walk panel for window/metric tests."""
    rng = np.random.default_rng(seed)
    values = np.cumsum(rng.normal(0.0, scale, (n_rows, n_channels)), axis=0) + 100.0
    names = tuple(f"v{i}" for i in range(n_channels))
    return Panel(range(n_rows), names, values)


def write_raw_csv(path, panel):
    """Write a panel the way a raw upstream export would (no comments)."""
    lines = [",".join(["timestamp", *panel.variables])]
    for i, label in enumerate(panel.timestamps):
        cells = [str(label)] + [repr(float(v)) for v in panel.values[i]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
