"""Multivariate time series containers, file readers and the window transform.

Missing values are stored as NaN inside float arrays. Every series is a
``(n_dims, length)`` array; datasets may mix lengths.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class DataFormatError(ValueError):
    """Raised when an input file or in-memory dataset is malformed."""


class DimensionMismatchError(ValueError):
    """Raised when data does not have the number of dimensions a model expects."""


@dataclass(frozen=True)
class Series:
    id: int
    values: np.ndarray
    label: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataFormatError(
                f"series {self.id}: values must be a non-empty (n_dims, length) array, "
                f"got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_dims(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MTSDataset:
    series: list[Series]
    class_names: list[str]
    n_dims: int

    def __post_init__(self):
        if self.n_dims < 1:
            raise DataFormatError("n_dims must be >= 1")
        ids = set()
        for s in self.series:
            if s.n_dims != self.n_dims:
                raise DataFormatError(
                    f"series {s.id} has {s.n_dims} dimensions, expected {self.n_dims}"
                )
            if s.label is not None and not 0 <= s.label < len(self.class_names):
                raise DataFormatError(f"series {s.id}: label {s.label} out of range")
            if s.id in ids:
                raise DataFormatError(f"duplicate series id {s.id}")
            ids.add(s.id)

    def __len__(self) -> int:
        return len(self.series)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def labels(self) -> np.ndarray:
        if any(s.label is None for s in self.series):
            raise DataFormatError("dataset contains unlabeled series")
        return np.array([s.label for s in self.series], dtype=np.int64)

    @property
    def ids(self) -> np.ndarray:
        return np.array([s.id for s in self.series], dtype=np.int64)

    @property
    def max_length(self) -> int:
        return max((s.length for s in self.series), default=0)

    def subset(self, indices: Iterable[int]) -> "MTSDataset":
        """Return the dataset restricted to the given positions (not ids)."""
        return replace(self, series=[self.series[i] for i in indices])

    def digest(self) -> str:
        """SHA-256 over class names, ids, labels and values; stable across runs."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.class_names).encode("utf-8"))
        for s in self.series:
            h.update(np.array([s.id, -1 if s.label is None else s.label, *s.values.shape],
                              dtype="<i8").tobytes())
            h.update(np.ascontiguousarray(s.values, dtype="<f8").tobytes())
        return h.hexdigest()

    def with_values(self, values: Sequence[np.ndarray]) -> "MTSDataset":
        """Copy of the dataset with each series' values replaced, ids and labels kept."""
        return replace(
            self,
            series=[Series(s.id, v, s.label) for s, v in zip(self.series, values)],
        )


@dataclass(frozen=True)
class WindowTable:
    """Flat view of every length-``w`` window.

    Column ``j * w + t`` holds dimension ``j`` at offset ``t`` of the window.
    """

    rows: np.ndarray
    mts_ids: np.ndarray
    window_starts: np.ndarray
    labels: np.ndarray | None
    w: int
    n_dims: int = field(default=1)

    def __len__(self) -> int:
        return self.rows.shape[0]


# --- readers -----------------------------------------------------------------

_MISSING_TOKENS = {"?", "", "nan", "NaN", "NAN"}


def _to_float(token: str, where: str) -> float:
    token = token.strip()
    if token in _MISSING_TOKENS:
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise DataFormatError(f"{where}: non-numeric value {token!r}") from None


def parse_ts(path: str | Path, class_names: Sequence[str] | None = None) -> MTSDataset:
    """Read a UEA/UCR ``.ts`` file.

    Parameters
    ----------
    path : str or Path
        File to read.
    class_names : sequence of str, optional
        Label order to use instead of the header's ``@classLabel`` list, e.g.
        the class order of a fitted model when reading test data.

    Returns
    -------
    MTSDataset
        Series ids are the 0-based line order in the ``@data`` section.
        ``?`` tokens become NaN.
    """
    path = Path(path)
    header: dict[str, str] = {}
    declared: list[str] | None = None
    has_labels = False
    in_data = False
    raw: list[tuple[int, list[list[float]], str | None]] = []

    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            where = f"{path.name}:{lineno}"
            if not in_data:
                if not line.startswith("@"):
                    raise DataFormatError(f"{where}: expected a header line starting with '@'")
                key, _, rest = line[1:].partition(" ")
                key = key.lower()
                rest = rest.strip()
                if key == "data":
                    in_data = True
                elif key == "classlabel":
                    parts = rest.split()
                    if not parts or parts[0].lower() not in ("true", "false"):
                        raise DataFormatError(f"{where}: malformed @classLabel line")
                    has_labels = parts[0].lower() == "true"
                    if has_labels:
                        declared = parts[1:]
                        if not declared:
                            raise DataFormatError(f"{where}: @classLabel true lists no classes")
                else:
                    header[key] = rest
                continue

            parts = line.split(":")
            label = None
            if has_labels:
                label = parts.pop().strip()
            dims = [[_to_float(tok, where) for tok in p.split(",")] for p in parts]
            raw.append((lineno, dims, label))

    if not in_data:
        raise DataFormatError(f"{path.name}: missing @data section")

    n_dims = None
    if "dimensions" in header:
        try:
            n_dims = int(header["dimensions"])
        except ValueError:
            raise DataFormatError(f"{path.name}: bad @dimensions value") from None
    elif header.get("univariate", "").lower() == "true":
        n_dims = 1
    elif raw:
        n_dims = len(raw[0][1])
    if n_dims is None:
        raise DataFormatError(f"{path.name}: cannot determine the number of dimensions")

    names = list(class_names) if class_names is not None else list(declared or [])
    index = {name: i for i, name in enumerate(names)}
    series = []
    for i, (lineno, dims, label) in enumerate(raw):
        where = f"{path.name}:{lineno}"
        if len(dims) != n_dims:
            raise DataFormatError(f"{where}: {len(dims)} dimensions, header declares {n_dims}")
        lengths = {len(d) for d in dims}
        if len(lengths) != 1:
            raise DataFormatError(f"{where}: dimensions of unequal length {sorted(lengths)}")
        y = None
        if label is not None:
            if label not in index:
                raise DataFormatError(f"{where}: unknown class label {label!r}")
            y = index[label]
        series.append(Series(i, np.array(dims, dtype=float), y))
    return MTSDataset(series, names, n_dims)


def parse_long_csv(path: str | Path, class_names: Sequence[str] | None = None) -> MTSDataset:
    """Read the long CSV layout ``MTS_ID,Timestamp,Attribute1..AttributeD[,Class]``.

    Rows of one ``MTS_ID`` must have strictly increasing timestamps; they do
    not need to be contiguous in the file. Empty attribute cells are missing.
    Without ``class_names`` the classes are ordered by first appearance.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            head = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path.name}: empty file, expected a header row") from None
        lowered = [h.lower() for h in head]
        if len(head) < 3 or lowered[0] != "mts_id" or lowered[1] != "timestamp":
            raise DataFormatError(
                f"{path.name}: header must start with MTS_ID,Timestamp, got {head[:2]}"
            )
        has_class = lowered[-1] == "class"
        n_dims = len(head) - 2 - int(has_class)
        if n_dims < 1:
            raise DataFormatError(f"{path.name}: no attribute columns")

        names = list(class_names) if class_names is not None else []
        index = {name: i for i, name in enumerate(names)}
        frozen_names = class_names is not None
        rows: dict[int, list[tuple[float, list[float]]]] = {}
        labels: dict[int, int | None] = {}

        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            where = f"{path.name}:{lineno}"
            if len(rec) != len(head):
                raise DataFormatError(f"{where}: expected {len(head)} fields, got {len(rec)}")
            try:
                mts_id = int(rec[0])
                stamp = float(rec[1])
            except ValueError:
                raise DataFormatError(f"{where}: MTS_ID and Timestamp must be numeric") from None
            values = [_to_float(c, where) for c in rec[2 : 2 + n_dims]]
            label = None
            if has_class and rec[-1].strip():
                name = rec[-1].strip()
                if name not in index:
                    if frozen_names:
                        raise DataFormatError(f"{where}: unknown class label {name!r}")
                    index[name] = len(names)
                    names.append(name)
                label = index[name]

            seq = rows.setdefault(mts_id, [])
            if seq:
                if stamp == seq[-1][0]:
                    raise DataFormatError(f"{where}: duplicate timestamp {rec[1]} for MTS {mts_id}")
                if stamp < seq[-1][0]:
                    raise DataFormatError(f"{where}: timestamps not increasing for MTS {mts_id}")
                if labels[mts_id] != label:
                    raise DataFormatError(f"{where}: inconsistent class label for MTS {mts_id}")
            else:
                labels[mts_id] = label
            seq.append((stamp, values))

    series = [
        Series(mts_id, np.array([v for _, v in seq], dtype=float).T, labels[mts_id])
        for mts_id, seq in rows.items()
    ]
    return MTSDataset(series, names, n_dims)


def _format_value(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def emit_long_csv(data: MTSDataset, path: str | Path) -> None:
    """Write ``data`` in the long CSV layout read by :func:`parse_long_csv`.

    Values use ``repr`` so they read back bit-identically; timestamps are
    0-based positions.
    """
    labeled = any(s.label is not None for s in data.series)
    head = ["MTS_ID", "Timestamp"] + [f"Attribute{j + 1}" for j in range(data.n_dims)]
    if labeled:
        head.append("Class")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(head)
        for s in data.series:
            for t in range(s.length):
                rec = [str(s.id), str(t)] + [_format_value(x) for x in s.values[:, t]]
                if labeled:
                    rec.append("" if s.label is None else data.class_names[s.label])
                writer.writerow(rec)


def read_dataset(
    path: str | Path, fmt: str | None = None, class_names: Sequence[str] | None = None
) -> MTSDataset:
    """Dispatch to :func:`parse_ts` or :func:`parse_long_csv` by ``fmt`` or file suffix."""
    path = Path(path)
    fmt = fmt or ("ts" if path.suffix.lower() == ".ts" else "csv")
    if fmt == "ts":
        return parse_ts(path, class_names)
    if fmt == "csv":
        return parse_long_csv(path, class_names)
    raise ValueError(f"unknown format {fmt!r}, expected 'ts' or 'csv'")


# --- synthetic data ----------------------------------------------------------


def generate_synthetic(
    n_per_class: int = 10,
    length: int = 100,
    square_start: int = 60,
    square_len: int = 20,
    n_squares: int = 1,
    seed: int = 0,
    *,
    second_start: int = 72,
    periods: float = 2.0,
    max_shift: int = 4,
    square_level: float = 1.0,
) -> MTSDataset:
    """Two-class sine dataset whose positive class carries square pulses on dim 1.

    Both dimensions carry the same unit sine wave with ``periods`` full
    periods over the series, advanced by a per-series shift of ``k`` samples
    with ``k`` drawn uniformly from ``0 .. max_shift``. Keeping the shift on
    the sampling grid means every sine window of every series is an exact copy
    of a window of the reference wave. A square pulse overwrites dimension 1
    with the constant ``square_level`` on ``[start, start + square_len)``.

    With ``n_squares=1`` only the positive class has a pulse, at
    ``square_start``. With ``n_squares=2`` both classes have the pulse at
    ``square_start`` and the positive class has a second one at
    ``second_start``, so only a window spanning both pulses separates them.

    Series ``0 .. n_per_class - 1`` are negative (label 0), the rest positive.
    """
    if n_squares not in (1, 2):
        raise ValueError("n_squares must be 1 or 2")
    if max_shift < 0:
        raise ValueError("max_shift must be >= 0")
    if n_per_class < 1 or length < 1 or square_len < 1:
        raise ValueError("n_per_class, length and square_len must be >= 1")
    starts = [square_start] + ([second_start] if n_squares == 2 else [])
    for s in starts:
        if s < 0 or s + square_len > length:
            raise ValueError(f"square [{s}, {s + square_len}) does not fit in length {length}")

    rng = np.random.default_rng(seed)
    t = np.arange(length)
    series = []
    for i in range(2 * n_per_class):
        label = int(i >= n_per_class)
        shift = int(rng.integers(0, max_shift + 1))
        values = np.tile(np.sin(2 * np.pi * periods * (t + shift) / length), (2, 1))
        pulses = starts if label == 1 else starts[:-1]
        for s in pulses:
            values[0, s : s + square_len] = square_level
        series.append(Series(i, values, label))
    return MTSDataset(series, ["negative", "positive"], 2)


def train_test_split(
    data: MTSDataset, test_size: float = 0.5, seed: int | None = None
) -> tuple[MTSDataset, MTSDataset]:
    """Stratified split by series. Without a seed the original order is kept."""
    rng = None if seed is None else np.random.default_rng(seed)
    labels = data.labels
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if rng is not None:
            members = rng.permutation(members)
        n_test = int(round(len(members) * test_size))
        train_idx.extend(members[: len(members) - n_test])
        test_idx.extend(members[len(members) - n_test :])
    return data.subset(sorted(train_idx)), data.subset(sorted(test_idx))


# --- transforms --------------------------------------------------------------


def _series_windows(values: np.ndarray, w: int) -> np.ndarray:
    d, length = values.shape
    if length < w:
        padded = np.zeros((d, w))
        padded[:, :length] = values
        values = padded
    # (n_windows, d, w) -> attribute-major rows
    win = sliding_window_view(values, w, axis=1).transpose(1, 0, 2)
    return win.reshape(win.shape[0], d * w)


def transform_windows(data: MTSDataset, w: int) -> WindowTable:
    """Slide a length-``w`` window over every series.

    A series of length ``T >= w`` yields ``T - w + 1`` rows; a shorter one is
    zero-padded at the end to ``w`` and yields one row. Rows are ordered by
    series (dataset order) then window start.
    """
    if w < 1:
        raise ValueError(f"window length must be >= 1, got {w}")
    blocks, ids, starts, labels = [], [], [], []
    labeled = all(s.label is not None for s in data.series)
    for s in data.series:
        rows = _series_windows(s.values, w)
        n = rows.shape[0]
        blocks.append(rows)
        ids.append(np.full(n, s.id, dtype=np.int64))
        starts.append(np.arange(n, dtype=np.int64))
        if labeled:
            labels.append(np.full(n, s.label, dtype=np.int64))
    if not blocks:
        empty = np.empty(0, dtype=np.int64)
        return WindowTable(
            np.empty((0, data.n_dims * w)), empty, empty, empty if labeled else None, w, data.n_dims
        )
    return WindowTable(
        rows=np.ascontiguousarray(np.vstack(blocks)),
        mts_ids=np.concatenate(ids),
        window_starts=np.concatenate(starts),
        labels=np.concatenate(labels) if labeled else None,
        w=w,
        n_dims=data.n_dims,
    )


def inject_missing(data: MTSDataset, fraction: float, seed=0) -> MTSDataset:
    """Mark ``floor(fraction * T)`` entries of every dimension of every series as NaN.

    Positions are drawn uniformly without replacement. ``seed`` is anything
    :func:`numpy.random.default_rng` accepts.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    if fraction == 0.0:
        return data
    rng = np.random.default_rng(seed)
    out = []
    for s in data.series:
        values = s.values.copy()
        k = int(math.floor(fraction * s.length + 1e-9))
        for j in range(s.n_dims):
            values[j, rng.choice(s.length, size=k, replace=False)] = np.nan
        out.append(values)
    return data.with_values(out)


def inject_noise(data: MTSDataset, sigma: float, seed=0) -> MTSDataset:
    """Add independent N(0, sigma^2) noise to every non-missing entry."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return data
    rng = np.random.default_rng(seed)
    # NaN + noise stays NaN
    return data.with_values([s.values + rng.normal(0.0, sigma, s.values.shape) for s in data.series])


def znormalize(data: MTSDataset) -> MTSDataset:
    """Per series and dimension: subtract the mean, divide by the population std.

    Statistics ignore NaN entries, which stay NaN. Constant dimensions map to 0.
    """
    out = []
    for s in data.series:
        values = s.values
        present = ~np.isnan(values)
        if not present.any(axis=1).all():
            raise DataFormatError(f"series {s.id}: a dimension has no observed values")
        mean = np.nanmean(values, axis=1, keepdims=True)
        std = np.nanstd(values, axis=1, keepdims=True)
        centered = values - mean
        safe = np.where(std > 0, std, 1.0)
        out.append(np.where(std > 0, centered / safe, np.where(present, 0.0, np.nan)))
    return data.with_values(out)
