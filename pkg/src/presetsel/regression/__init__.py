"""Native regression model zoo, metrics, cross-validation, and bundles."""

from .core import (
    DEFAULT_HYPERPARAMS,
    FAMILIES,
    LINEAR_FAMILIES,
    TREE_FAMILIES,
    CVReport,
    FitError,
    Metrics,
    ModelSpec,
    PresetEntry,
    PresetModelBundle,
    TrainedModel,
    compute_metrics,
    default_specs,
    evaluate_bundle,
    fit,
    kfold_cv,
    kfold_indices,
    kfold_seed,
    predict,
    select_best_model,
    train_all_presets,
)
from .bundle import BundleFormatError, load_bundle, save_bundle
from ._trees import per_tree_predictions

__all__ = [
    "DEFAULT_HYPERPARAMS",
    "FAMILIES",
    "LINEAR_FAMILIES",
    "TREE_FAMILIES",
    "CVReport",
    "FitError",
    "Metrics",
    "ModelSpec",
    "PresetEntry",
    "PresetModelBundle",
    "TrainedModel",
    "BundleFormatError",
    "compute_metrics",
    "default_specs",
    "evaluate_bundle",
    "fit",
    "kfold_cv",
    "kfold_indices",
    "kfold_seed",
    "load_bundle",
    "per_tree_predictions",
    "predict",
    "save_bundle",
    "select_best_model",
    "train_all_presets",
]
