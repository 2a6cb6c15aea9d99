"""Repeat-last baseline forecaster and forecast-file interchange.

External models exchange predictions through a long-format CSV: comment
headers ``#L=``, ``#H=``, ``#model=`` (and ``#variables=``) followed by
``sample_id,step,variable,y_pred`` records, one per prediction element.
``sample_id`` indexes the truth window the prediction targets.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlignError, FormatError, WindowError
from .frame import WindowSet
from .metrics import ForecastBatch

DEFAULT_NOISE_STD = 0.001


def naive_forecast(
    windows: WindowSet,
    horizon: int,
    noise_std: float = DEFAULT_NOISE_STD,
    seed: int = 0,
    redraw_per_step: bool = True,
) -> np.ndarray:
    """Repeat each window's last observed value for all horizon steps.

    Gaussian noise (mean 0, std ``noise_std``) is added so downstream rank
    statistics never see an exactly constant prediction. Noise is drawn in a
    fixed (sample, step, channel) order from ``seed``, so outputs are
    bit-reproducible. With ``redraw_per_step=False`` one draw per (sample,
    channel) is shared across the horizon.
    """
    if len(windows) == 0:
        raise WindowError("no windows to forecast")
    if horizon != windows.spec.horizon:
        raise AlignError(
            f"requested horizon {horizon} != window horizon {windows.spec.horizon}"
        )
    if noise_std < 0:
        raise ValueError(f"noise_std must be non-negative, got {noise_std}")
    last = windows.last_observed  # (B, C)
    preds = np.repeat(last[:, None, :], horizon, axis=1).astype(float)
    if noise_std > 0:
        b, c = last.shape
        shape = (b, horizon, c) if redraw_per_step else (b, 1, c)
        rng = np.random.default_rng(seed)
        preds = preds + rng.normal(0.0, noise_std, size=shape)
    return preds


def make_batch(windows: WindowSet, y_pred: np.ndarray) -> ForecastBatch:
    """Pair predictions with the windows' truth blocks as a ForecastBatch."""
    y_pred = np.asarray(y_pred, dtype=float)
    if y_pred.shape != windows.truth.shape:
        raise AlignError(
            f"prediction shape {y_pred.shape} != truth shape {windows.truth.shape}"
        )
    return ForecastBatch(
        y_true=windows.truth,
        y_pred=y_pred,
        sample_order=np.arange(len(windows)),
        variables=tuple(windows.target_vars),
        origins=windows.origins,
        last_observed=windows.last_observed,
    )


def write_forecasts(
    path,
    batch: ForecastBatch,
    input_len: int,
    model: str = "naive",
    header_comments: Sequence[str] = (),
) -> None:
    """Write a batch's predictions in the long-format interchange CSV."""
    if batch.variables is None:
        raise FormatError("batch has no variable names; cannot write forecasts")
    b, h, c = batch.shape
    lines = list(header_comments)
    lines.append(f"#L={input_len}")
    lines.append(f"#H={h}")
    lines.append(f"#model={model}")
    lines.append(f"#variables={','.join(batch.variables)}")
    lines.append("sample_id,step,variable,y_pred")
    for i in range(b):
        sample_id = int(batch.sample_order[i])
        for step in range(h):
            for j, var in enumerate(batch.variables):
                lines.append(f"{sample_id},{step + 1},{var},{repr(float(batch.y_pred[i, step, j]))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metadata(path) -> dict:
    """Read the ``#key=value`` header of a forecast file without its records."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such forecast file: {path}")
    meta: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
    for key in ("L", "H"):
        if key in meta:
            try:
                meta[key] = int(meta[key])
            except ValueError:
                raise FormatError(f"{path}: header #{key}={meta[key]!r} is not an integer") from None
    if "variables" in meta:
        meta["variables"] = tuple(v for v in meta["variables"].split(",") if v)
    return meta


def load_forecasts(path, truth_windows: WindowSet) -> ForecastBatch:
    """Read a forecast file and align it with the given truth windows.

    Every referenced sample must carry a full, duplicate-free grid of steps
    1..H over a single variable set; the variables must be a subset of the
    windows' target variables and the sample ids a subset of the window
    indices.
    """
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such forecast file: {path}")
    meta = read_metadata(path)
    horizon = truth_windows.spec.horizon
    if "H" not in meta:
        raise FormatError(f"{path}: missing #H header")
    if meta["H"] != horizon:
        raise AlignError(f"forecast horizon {meta['H']} != truth horizon {horizon}")
    if "L" in meta and meta["L"] != truth_windows.spec.input_len:
        raise AlignError(
            f"forecast input length {meta['L']} != truth input length "
            f"{truth_windows.spec.input_len}"
        )

    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["sample_id", "step", "variable", "y_pred"]:
        raise FormatError(f"{path}: expected header sample_id,step,variable,y_pred")

    records: dict[tuple[int, int, str], float] = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise FormatError(f"{path}: row {r} has {len(row)} fields, expected 4")
        try:
            sample_id = int(row[0])
            step = int(row[1])
            value = float(row[3])
        except ValueError:
            raise FormatError(f"{path}: row {r}: malformed record {row!r}") from None
        variable = row[2].strip()
        key = (sample_id, step, variable)
        if key in records:
            raise FormatError(
                f"{path}: duplicate record for sample {sample_id}, step {step}, "
                f"variable {variable!r}"
            )
        records[key] = value
    if not records:
        raise FormatError(f"{path}: no forecast records")

    sample_ids = sorted({k[0] for k in records})
    file_vars = {k[2] for k in records}
    targets = tuple(truth_windows.target_vars)
    unknown = sorted(file_vars - set(targets))
    if unknown:
        raise AlignError(f"forecast variable(s) not in truth targets: {unknown}")
    variables = tuple(v for v in targets if v in file_vars)
    out_of_range = [s for s in sample_ids if not 0 <= s < len(truth_windows)]
    if out_of_range:
        raise AlignError(
            f"sample id(s) {out_of_range} outside the {len(truth_windows)} truth windows"
        )

    preds = np.empty((len(sample_ids), horizon, len(variables)))
    for i, sample_id in enumerate(sample_ids):
        for step in range(1, horizon + 1):
            for j, variable in enumerate(variables):
                key = (sample_id, step, variable)
                if key not in records:
                    raise FormatError(
                        f"{path}: missing step {step} of sample {sample_id} "
                        f"for variable {variable!r}"
                    )
                preds[i, step - 1, j] = records[key]
    if len(records) != preds.size:
        extra = len(records) - preds.size
        raise FormatError(f"{path}: {extra} record(s) outside the sample/step/variable grid")

    ids = np.asarray(sample_ids)
    var_idx = [targets.index(v) for v in variables]
    origins = truth_windows.origins
    return ForecastBatch(
        y_true=truth_windows.truth[ids][:, :, var_idx],
        y_pred=preds,
        sample_order=ids,
        variables=variables,
        origins=tuple(origins[s] for s in sample_ids),
        last_observed=truth_windows.last_observed[ids][:, var_idx],
    )
