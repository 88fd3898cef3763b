"""Cross-validation, grid search, metrics and the robustness experiment drivers."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .classifier import WIN_PCT_GRID, XEMModel, XEMParams, fit_xem, predict_labels
from .dataset import MTSDataset, inject_missing, inject_noise, znormalize
from .gbt import GBTParams
from .lce import LCEParams


@dataclass(frozen=True)
class Grid:
    """Hyperparameter grid; the defaults are the standard XEM tuning grid."""

    win_pct: tuple = WIN_PCT_GRID
    n_trees: tuple = (1, 5, 10, 20, 40, 60, 80, 100)
    max_depth: tuple = (0, 1, 2)

    def __post_init__(self):
        for name in ("win_pct", "n_trees", "max_depth"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"grid field {name!r} is empty")
            object.__setattr__(self, name, values)

    def points(self) -> list[tuple]:
        """``(win_pct, n_trees, max_depth)`` triples, simplest model first."""
        return sorted(set(itertools.product(self.win_pct, self.n_trees, self.max_depth)))

    def __len__(self) -> int:
        return len(self.points())


@dataclass(frozen=True)
class GridPointResult:
    win_pct: float
    n_trees: int
    max_depth: int
    fold_accuracies: tuple

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def key(self) -> tuple:
        return self.win_pct, self.n_trees, self.max_depth


@dataclass(frozen=True)
class CVResult:
    results: list[GridPointResult]
    best: GridPointResult
    model: XEMModel
    folds: list[np.ndarray] = field(repr=False, default_factory=list)


def accuracy(pred, truth) -> float:
    """Fraction of exact matches."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("accuracy of an empty prediction vector is undefined")
    return float(np.mean(pred == truth))


def average_rank(accuracy_table) -> np.ndarray:
    """Mean rank per method over datasets.

    ``accuracy_table`` is methods x datasets. Within a dataset the highest
    accuracy gets rank 1, ties share the mean of their ranks and missing
    (NaN) cells rank last.
    """
    table = np.asarray(accuracy_table, dtype=float)
    if table.ndim != 2 or table.size == 0:
        raise ValueError("accuracy table must be a non-empty methods x datasets matrix")
    scores = np.where(np.isnan(table), -np.inf, table)
    ranks = rankdata(-scores, method="average", axis=0)
    return ranks.mean(axis=1)


def stratified_kfold(labels, k: int = 3, seed: int = 0) -> list[np.ndarray]:
    """Split indices into ``k`` folds with per-class counts differing by at most one.

    Each class's members are shuffled and the classes concatenated; the
    concatenation is then dealt round-robin to the folds.
    """
    y = np.asarray(labels)
    n = len(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"cannot make {k} folds out of {n} samples")
    rng = np.random.default_rng(seed)
    dealt = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
    return [np.sort(dealt[i::k]) for i in range(k)]


def _params_for(point: tuple, gbt: GBTParams) -> XEMParams:
    win_pct, n_trees, max_depth = point
    return XEMParams(win_pct, LCEParams(n_trees, max_depth, gbt))


def grid_search(train: MTSDataset, grid: Grid | None = None, k: int = 3, seed: int = 0,
                gbt: GBTParams | None = None, n_jobs: int = 1) -> CVResult:
    """Stratified k-fold grid search, then refit of the winner on all of ``train``.

    The winner has the highest mean fold accuracy. Ties go to the smaller
    window, then fewer trees, then the shallower cascade.
    """
    grid = grid or Grid()
    gbt = gbt or GBTParams()
    folds = stratified_kfold(train.labels, k, seed)
    everything = np.arange(len(train))
    results = []
    for point in grid.points():
        params = _params_for(point, gbt)
        accs = []
        for held_out in folds:
            fit_idx = np.setdiff1d(everything, held_out)
            model = fit_xem(train.subset(fit_idx), params, seed=seed, n_jobs=n_jobs)
            test = train.subset(held_out)
            accs.append(accuracy(predict_labels(model, test), test.labels))
        results.append(GridPointResult(*point, tuple(accs)))
    # points are in tie-break order, so the first maximum wins
    best = max(results, key=lambda r: r.mean_accuracy)
    model = fit_xem(train, _params_for(best.key, gbt), seed=seed, n_jobs=n_jobs)
    return CVResult(results, best, model, folds)


@dataclass(frozen=True)
class MissingDataRow:
    fraction: float
    errors: tuple

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def std_error(self) -> float:
        if len(self.errors) < 2:
            return 0.0
        return float(np.std(self.errors, ddof=1) / np.sqrt(len(self.errors)))


def _test_error(model: XEMModel, test: MTSDataset) -> float:
    return 1.0 - accuracy(predict_labels(model, test), test.labels)


def missing_data_experiment(train: MTSDataset, test: MTSDataset, params: XEMParams,
                            fractions=(0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5),
                            replications: int = 10, seed: int = 0,
                            n_jobs: int = 1) -> list[MissingDataRow]:
    """Test error under an increasing share of values removed from train and test.

    Replication ``r`` uses ``seed + r`` for the model and derives the train
    and test masks from ``[seed + r, 0]`` and ``[seed + r, 1]``.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    rows = []
    for fraction in fractions:
        errors = []
        for r in range(replications):
            rep_seed = seed + r
            tr = inject_missing(train, fraction, [rep_seed, 0])
            te = inject_missing(test, fraction, [rep_seed, 1])
            model = fit_xem(tr, params, seed=rep_seed, n_jobs=n_jobs)
            errors.append(_test_error(model, te))
        rows.append(MissingDataRow(float(fraction), tuple(errors)))
    return rows


@dataclass(frozen=True)
class NoiseRow:
    sigma: float
    error: float


def noise_experiment(train: MTSDataset, test: MTSDataset, params: XEMParams,
                     sigmas=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0), seed: int = 0,
                     n_jobs: int = 1) -> list[NoiseRow]:
    """Test error after z-normalizing and adding Gaussian noise of each ``sigma``.

    The noise draws come from ``[seed, 0]`` (train) and ``[seed, 1]`` (test)
    for every sigma, so the levels differ only in scale.
    """
    train_z, test_z = znormalize(train), znormalize(test)
    rows = []
    for sigma in sigmas:
        tr = inject_noise(train_z, sigma, [seed, 0])
        te = inject_noise(test_z, sigma, [seed, 1])
        model = fit_xem(tr, params, seed=seed, n_jobs=n_jobs)
        rows.append(NoiseRow(float(sigma), _test_error(model, te)))
    return rows


def _write_rows(path: str | Path, header: list[str], rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_cv_csv(path: str | Path, result: CVResult) -> None:
    k = len(result.results[0].fold_accuracies)
    header = ["win_pct", "n_trees", "max_depth", "mean_accuracy"] + [f"fold_{i + 1}" for i in range(k)]
    _write_rows(path, header, [
        [r.win_pct, r.n_trees, r.max_depth, repr(r.mean_accuracy)] + [repr(a) for a in r.fold_accuracies]
        for r in result.results
    ])


def write_missing_csv(path: str | Path, rows: list[MissingDataRow]) -> None:
    _write_rows(path, ["fraction", "mean_error", "std_error"],
                [[repr(r.fraction), repr(r.mean_error), repr(r.std_error)] for r in rows])


def write_noise_csv(path: str | Path, rows: list[NoiseRow]) -> None:
    _write_rows(path, ["sigma", "error"], [[repr(r.sigma), repr(r.error)] for r in rows])
