"""Window-based MTS classifier on top of the cascade forest.

Every window of a series is scored by the forest; the series takes the class
of the single (window, class) cell with the highest probability, and that
window is the explanation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DimensionMismatchError, MTSDataset, Series, transform_windows
from .lce import LCEForest, LCEParams, fit_lce, predict_proba_forest

WIN_PCT_GRID = (20, 40, 60, 80, 100)


@dataclass(frozen=True)
class XEMParams:
    win_pct: float = 20
    lce: LCEParams = field(default_factory=LCEParams)

    def __post_init__(self):
        if not 0 < self.win_pct <= 100:
            raise ValueError(f"win_pct must lie in (0, 100], got {self.win_pct}")


@dataclass(frozen=True)
class XEMModel:
    forest: LCEForest
    w: int
    n_dims: int
    class_names: list[str]
    train_max_length: int
    win_pct: float
    params: XEMParams
    seed: int = 0
    train_digest: str = ""

    def __post_init__(self):
        if self.forest.input_width != self.n_dims * self.w:
            raise ValueError("forest input width must equal n_dims * w")


@dataclass(frozen=True)
class Explanation:
    mts_id: int
    predicted_class: int
    confidence: float
    window_start: int
    window_end: int
    per_window_probs: np.ndarray

    @property
    def window(self) -> tuple[int, int]:
        return self.window_start, self.window_end


def window_length_from_pct(win_pct: float, t_max: int) -> int:
    """``max(1, round(win_pct / 100 * t_max))`` with halves rounded up."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    return max(1, math.floor(win_pct * t_max / 100 + 0.5))


def fit_xem(train: MTSDataset, params: XEMParams | None = None, seed: int = 0,
            n_jobs: int = 1) -> XEMModel:
    """Fit the cascade forest on every window of the training series."""
    params = params or XEMParams()
    if len(train) == 0:
        raise ValueError("cannot fit on an empty dataset")
    t_max = train.max_length
    w = window_length_from_pct(params.win_pct, t_max)
    table = transform_windows(train, w)
    forest = fit_lce(table.rows, table.labels, params.lce, seed=seed,
                     n_classes=train.n_classes, n_jobs=n_jobs)
    return XEMModel(forest, w, train.n_dims, list(train.class_names), t_max,
                    params.win_pct, params, seed, train.digest())


def aggregate(window_probs, mts_ids, window_starts):
    """Reduce per-window probabilities to one decision per series.

    Returns a list of ``(mts_id, class, confidence, window_start)`` in order
    of first appearance of each id. The winning cell is the maximum over all
    windows and classes of the series; ties go to the earliest window, then
    the lowest class index.
    """
    probs = np.asarray(window_probs, dtype=float)
    ids = np.asarray(mts_ids)
    starts = np.asarray(window_starts)
    if probs.ndim != 2 or len(probs) != len(ids) or len(ids) != len(starts):
        raise ValueError("window_probs, mts_ids and window_starts must align")
    out = []
    _, first = np.unique(ids, return_index=True)
    for mts_id in ids[np.sort(first)]:
        rows = np.flatnonzero(ids == mts_id)
        block = probs[rows]
        top = block.max()
        r, c = np.nonzero(block == top)
        # earliest window, then lowest class
        best = np.lexsort((c, starts[rows][r]))[0]
        out.append((mts_id.item(), int(c[best]), float(top), int(starts[rows][r[best]])))
    return out


def predict(model: XEMModel, data: MTSDataset, n_jobs: int = 1) -> list[Explanation]:
    """Classify every series of ``data`` and return one explanation per series."""
    if data.n_dims != model.n_dims:
        raise DimensionMismatchError(
            f"model expects {model.n_dims} dimensions, data has {data.n_dims}"
        )
    if len(data) == 0:
        return []
    table = transform_windows(data, model.w)
    probs = predict_proba_forest(model.forest, table.rows, n_jobs=n_jobs)
    decisions = aggregate(probs, table.mts_ids, table.window_starts)
    explanations = []
    for mts_id, cls, conf, start in decisions:
        rows = table.mts_ids == mts_id
        explanations.append(
            Explanation(mts_id, cls, conf, start, start + model.w, probs[rows])
        )
    return explanations


def predict_labels(model: XEMModel, data: MTSDataset) -> np.ndarray:
    return np.array([e.predicted_class for e in predict(model, data)], dtype=np.int64)


def _window_values(series: Series, start: int, end: int) -> np.ndarray:
    values = np.zeros((series.n_dims, end - start))
    stop = min(end, series.length)
    values[:, : stop - start] = series.values[:, start:stop]
    return values


def _csv_number(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def explain_text(e: Explanation, class_names, series: Series | None = None) -> str:
    """Plain-text report of an explanation.

    When ``series`` is given the report ends with the window's values as CSV
    (``timestamp,dim_1..dim_d``); timestamps beyond the series end are the
    zero padding.
    """
    lines = [
        f"MTS {e.mts_id}",
        f"predicted class: {class_names[e.predicted_class]}",
        f"confidence: {e.confidence:.3f}",
        f"discriminative window: [{e.window_start}, {e.window_end})",
    ]
    if series is not None:
        values = _window_values(series, e.window_start, e.window_end)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["timestamp"] + [f"dim_{j + 1}" for j in range(series.n_dims)])
        for t in range(values.shape[1]):
            writer.writerow([e.window_start + t] + [_csv_number(v) for v in values[:, t]])
        lines += ["", buf.getvalue().rstrip("\n")]
    return "\n".join(lines) + "\n"


def write_explanation_csv(path: str | Path, series: Series, e: Explanation) -> None:
    """Whole series with an ``in_window`` flag marking the explanation window."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp"] + [f"dim_{j + 1}" for j in range(series.n_dims)]
                        + ["in_window"])
        for t in range(series.length):
            flag = int(e.window_start <= t < e.window_end)
            writer.writerow([t] + [_csv_number(v) for v in series.values[:, t]] + [flag])
