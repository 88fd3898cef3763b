"""Explainable multivariate time series classification.

A cascade-tree forest with a boosted model at every node is trained on all
fixed-length windows of the series. A series takes the class of its single
most confident window, and that window is returned as the explanation.
"""

__version__ = "0.1.0"

from .classifier import (  # noqa: E402
    WIN_PCT_GRID,
    Explanation,
    XEMModel,
    XEMParams,
    aggregate,
    explain_text,
    fit_xem,
    predict,
    predict_labels,
    window_length_from_pct,
    write_explanation_csv,
)
from .dataset import (  # noqa: E402
    DataFormatError,
    DimensionMismatchError,
    MTSDataset,
    Series,
    WindowTable,
    generate_synthetic,
    inject_missing,
    inject_noise,
    read_dataset,
    train_test_split,
    transform_windows,
    znormalize,
)
from .evaluation import (  # noqa: E402
    CVResult,
    Grid,
    accuracy,
    average_rank,
    grid_search,
    missing_data_experiment,
    noise_experiment,
    stratified_kfold,
)
from .gbt import GBTModel, GBTParams, fit_gbt, predict_proba_gbt  # noqa: E402
from .lce import LCEForest, LCEParams, fit_lce, predict_proba_forest  # noqa: E402
from .serialization import load_model, save_model  # noqa: E402

__all__ = [
    "CVResult", "DataFormatError", "DimensionMismatchError", "Explanation", "GBTModel",
    "GBTParams", "Grid", "LCEForest", "LCEParams", "MTSDataset", "Series", "WIN_PCT_GRID",
    "WindowTable", "XEMModel", "XEMParams", "accuracy", "aggregate", "average_rank",
    "explain_text", "fit_gbt", "fit_lce", "fit_xem", "generate_synthetic", "grid_search",
    "inject_missing", "inject_noise", "load_model", "missing_data_experiment",
    "noise_experiment", "predict", "predict_labels", "predict_proba_forest",
    "predict_proba_gbt", "read_dataset", "save_model", "stratified_kfold",
    "train_test_split", "transform_windows", "window_length_from_pct",
    "write_explanation_csv", "znormalize",
]
