"""Panel data model with CSV ingestion, chronological splits, and sliding windows."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import IngestError, SplitError, WindowError

FREQUENCIES = ("daily", "hourly", "minutely")


def _timestamp_key(label):
    """Sortable key for a timestamp label: integer index or ISO-8601 text."""
    if isinstance(label, (int, np.integer)):
        return int(label)
    text = str(label).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise IngestError(
            f"timestamp {label!r} is neither an integer index nor ISO-8601"
        ) from None


@dataclass(frozen=True)
class Panel:
    """Dense timestamps x variables value matrix.

    Timestamps are opaque labels (integer index or ISO-8601 text) kept in
    strictly increasing order; all window arithmetic is positional. Instances
    are immutable after construction and safe to share across threads.
    """

    timestamps: tuple
    variables: tuple[str, ...]
    values: np.ndarray
    freq: str = "daily"

    def __post_init__(self):
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "variables", tuple(str(v) for v in self.variables))
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2:
            raise IngestError(f"panel values must be 2-D, got {vals.ndim}-D")
        if vals.shape != (len(self.timestamps), len(self.variables)):
            raise IngestError(
                f"value shape {vals.shape} does not match "
                f"{len(self.timestamps)} timestamps x {len(self.variables)} variables"
            )
        if not np.isfinite(vals).all():
            raise IngestError("panel values must be finite (no gaps, NaN, or inf)")
        if len(set(self.variables)) != len(self.variables):
            raise IngestError("variable names must be unique")
        if self.freq not in FREQUENCIES:
            raise IngestError(f"freq must be one of {FREQUENCIES}, got {self.freq!r}")
        keys = [_timestamp_key(t) for t in self.timestamps]
        try:
            increasing = all(a < b for a, b in zip(keys, keys[1:]))
        except TypeError:
            raise IngestError("timestamps mix integer and calendar labels") from None
        if not increasing:
            raise IngestError("timestamps must be strictly increasing with no duplicates")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_rows(self) -> int:
        return len(self.timestamps)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def column(self, name: str) -> np.ndarray:
        if name not in self.variables:
            raise IngestError(f"panel has no variable {name!r}")
        return self.values[:, self.variables.index(name)]

    def select(self, names: Sequence[str]) -> "Panel":
        """Panel restricted to the given variables, in the given order."""
        idx = [self.variables.index(n) if n in self.variables else -1 for n in names]
        missing = [n for n, i in zip(names, idx) if i < 0]
        if missing:
            raise IngestError(f"panel has no variable(s) {missing}")
        return Panel(self.timestamps, tuple(names), self.values[:, idx], self.freq)

    def rows(self, start: int, stop: int) -> "Panel":
        """Contiguous row slice [start, stop) as a new panel."""
        return Panel(
            self.timestamps[start:stop], self.variables, self.values[start:stop], self.freq
        )


def load_csv(path, timestamp_column: str | None = None, freq: str = "daily") -> Panel:
    """Read a panel from CSV: header row, one timestamp column, numeric cells.

    Lines starting with ``#`` are provenance comments and are skipped. Rows
    are sorted by timestamp; duplicate timestamps and non-numeric cells are
    rejected with their location.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = rows[1:]
    if not data:
        raise IngestError(f"{path}: no data rows")
    ts_name = timestamp_column if timestamp_column is not None else header[0]
    if ts_name not in header:
        raise IngestError(f"{path}: no timestamp column {ts_name!r}")
    ts_idx = header.index(ts_name)
    variables = [h for i, h in enumerate(header) if i != ts_idx]
    labels: list[str] = []
    matrix = np.empty((len(data), len(variables)))
    for r, row in enumerate(data, start=2):
        if len(row) != len(header):
            raise IngestError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        labels.append(row[ts_idx].strip())
        j = 0
        for i, cell in enumerate(row):
            if i == ts_idx:
                continue
            try:
                value = float(cell)
            except ValueError:
                value = math.nan
            if not math.isfinite(value):
                raise IngestError(
                    f"{path}: non-numeric value {cell!r} at row {r}, column {header[i]!r}"
                )
            matrix[r - 2, j] = value
            j += 1
    keys = [_timestamp_key(lab) for lab in labels]
    try:
        order = sorted(range(len(labels)), key=lambda i: keys[i])
    except TypeError:
        raise IngestError(f"{path}: timestamps mix integer and calendar labels") from None
    return Panel(
        tuple(labels[i] for i in order), tuple(variables), matrix[order], freq
    )


def write_csv(panel: Panel, path, header_comments: Sequence[str] = ()) -> None:
    """Write a panel as CSV with full round-trip precision (repr of each float)."""
    lines = list(header_comments)
    lines.append(",".join(["timestamp", *panel.variables]))
    for i, label in enumerate(panel.timestamps):
        cells = [str(label)]
        cells.extend(repr(float(v)) for v in panel.values[i])
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/val/test fractions; must sum to 1."""

    train_fraction: float
    val_fraction: float
    test_fraction: float

    def __post_init__(self):
        for name, frac in (
            ("train_fraction", self.train_fraction),
            ("val_fraction", self.val_fraction),
            ("test_fraction", self.test_fraction),
        ):
            if not (0.0 < frac < 1.0):
                raise SplitError(f"{name} must be in (0, 1), got {frac}")
        total = self.train_fraction + self.val_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-12:
            raise SplitError(f"fractions must sum to 1, got {total!r}")


def chronological_split(panel: Panel, spec: SplitSpec) -> tuple[Panel, Panel, Panel]:
    """Contiguous order-preserving train/val/test partition.

    Train and test lengths are floored; the remainder goes to validation,
    the rule that reproduces published partition sizes such as
    6533 -> (4573, 654, 1306) at 0.7/0.1/0.2.
    """
    n = panel.n_rows
    n_train = math.floor(n * spec.train_fraction)
    n_test = math.floor(n * spec.test_fraction)
    n_val = n - n_train - n_test
    if min(n_train, n_val, n_test) < 1:
        raise SplitError(f"split of {n} rows at {spec} leaves an empty partition")
    return (
        panel.rows(0, n_train),
        panel.rows(n_train, n_train + n_val),
        panel.rows(n_train + n_val, n),
    )


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: input length, forecast horizon, target subset."""

    input_len: int
    horizon: int
    target_vars: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "target_vars", tuple(self.target_vars))
        if self.input_len < 1:
            raise WindowError(f"input_len must be >= 1, got {self.input_len}")
        if self.horizon < 1:
            raise WindowError(f"horizon must be >= 1, got {self.horizon}")


class Window(NamedTuple):
    inputs: np.ndarray  # (input_len, n_vars), all panel variables
    truth: np.ndarray  # (horizon, n_targets)
    origin: object  # timestamp label of the last input row


class WindowSet(Sequence):
    """Chronological rolling-origin windows over one panel.

    Behaves as a sequence of :class:`Window` tuples while exposing the stacked
    tensors (``inputs``, ``truth``) for vectorised consumers.
    """

    def __init__(self, inputs, truth, origin_indices, timestamps, variables, spec):
        self.inputs = inputs  # (B, L, C)
        self.truth = truth  # (B, H, Ct)
        self.origin_indices = origin_indices  # (B,) row index of each origin
        self.timestamps = timestamps
        self.variables = variables
        self.target_vars = spec.target_vars or variables
        self.spec = spec
        self._target_idx = [variables.index(v) for v in self.target_vars]

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def __getitem__(self, i: int) -> Window:
        if not isinstance(i, (int, np.integer)):
            raise TypeError("window index must be an integer")
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(f"window index {i} out of range for {n} windows")
        return Window(self.inputs[i], self.truth[i], self.origins[i])

    @property
    def origins(self) -> tuple:
        return tuple(self.timestamps[i] for i in self.origin_indices)

    @property
    def last_observed(self) -> np.ndarray:
        """(B, n_targets) last input-row value of each target variable."""
        return self.inputs[:, -1, self._target_idx]


def sliding_windows(panel: Panel, spec: WindowSpec) -> WindowSet:
    """All overlapping (input, truth) windows, oldest first.

    Produces exactly ``n_rows - input_len - horizon + 1`` windows; the truth
    block starts on the row right after the input block, so the origin always
    precedes every truth timestamp.
    """
    n, L, H = panel.n_rows, spec.input_len, spec.horizon
    b = n - L - H + 1
    if b < 1:
        raise WindowError(
            f"panel too short: {n} rows < input_len {L} + horizon {H}"
        )
    targets = spec.target_vars or panel.variables
    missing = [v for v in targets if v not in panel.variables]
    if missing:
        raise WindowError(f"target variable(s) not in panel: {missing}")
    t_idx = [panel.variables.index(v) for v in targets]
    swv = np.lib.stride_tricks.sliding_window_view
    inputs = np.swapaxes(swv(panel.values, L, axis=0), 1, 2)[:b]
    truth = np.swapaxes(swv(panel.values[:, t_idx], H, axis=0), 1, 2)[L : L + b]
    origin_indices = np.arange(L - 1, L - 1 + b)
    resolved = WindowSpec(L, H, tuple(targets))
    return WindowSet(inputs, truth, origin_indices, panel.timestamps, panel.variables, resolved)
