"""Model zoo core: specs, fitting, prediction, metrics, CV, and selection.

Ten natively implemented regression families share one ``fit``/``predict``
surface.  Model selection minimizes mean cross-validated MAPE; ties resolve
to the earlier family in FAMILIES order.  Every fit is a pure function of
(inputs, spec.seed): per-fold and per-preset work derives its randomness from
the caller's seed, never from execution order, so results are identical under
any scheduling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..presets import PRESETS, ordinal
from . import _linear, _neighbors, _trees

log = logging.getLogger(__name__)

FAMILIES: tuple[str, ...] = (
    "linear",
    "ridge",
    "lasso",
    "elastic_net",
    "huber",
    "knn",
    "decision_tree",
    "random_forest",
    "extra_trees",
    "gradient_boosting",
)

# Documented default hyperparameters for each family.
DEFAULT_HYPERPARAMS: dict[str, dict] = {
    "linear": {},
    "ridge": {"alpha": 1.0},
    "lasso": {"alpha": 0.001, "max_iter": 2000, "tol": 1e-10},
    "elastic_net": {"alpha": 0.001, "l1_ratio": 0.5, "max_iter": 2000, "tol": 1e-10},
    "huber": {"delta": 1.0, "max_iter": 200, "tol": 1e-10},
    "knn": {"k": 5, "weights": "inverse_distance"},
    "decision_tree": {"max_depth": 12, "min_samples_leaf": 2},
    "random_forest": {
        "n_trees": 100,
        "max_depth": 12,
        "min_samples_leaf": 2,
        "max_features": 1.0,
        "bootstrap": True,
    },
    "extra_trees": {"n_trees": 100, "max_depth": 12, "min_samples_leaf": 2, "max_features": 1.0},
    "gradient_boosting": {
        "n_rounds": 200,
        "learning_rate": 0.05,
        "max_depth": 4,
        "min_samples_leaf": 1,
    },
}

# Families fit on standardized features (the transform is stored with the
# model); tree families are scale-equivariant and fit raw values.
_STANDARDIZED_FAMILIES = frozenset(
    {"linear", "ridge", "lasso", "elastic_net", "huber", "knn"}
)
LINEAR_FAMILIES = frozenset({"linear", "ridge", "lasso", "elastic_net", "huber"})
TREE_FAMILIES = frozenset({"decision_tree", "random_forest", "extra_trees", "gradient_boosting"})

_MIN_SAMPLES = {
    "linear": 2,
    "ridge": 2,
    "lasso": 2,
    "elastic_net": 2,
    "huber": 2,
    "knn": 1,
    "decision_tree": 1,
    "random_forest": 1,
    "extra_trees": 1,
    "gradient_boosting": 1,
}

_FITTERS = {
    "linear": _linear.fit_linear,
    "ridge": _linear.fit_ridge,
    "lasso": _linear.fit_lasso,
    "elastic_net": _linear.fit_elastic_net,
    "huber": _linear.fit_huber,
    "knn": _neighbors.fit_knn,
    "decision_tree": _trees.fit_decision_tree,
    "random_forest": _trees.fit_random_forest,
    "extra_trees": _trees.fit_extra_trees,
    "gradient_boosting": _trees.fit_gradient_boosting,
}


class FitError(RuntimeError):
    """Model fitting failed (degenerate data or no usable candidate)."""


@dataclass(frozen=True)
class ModelSpec:
    """A model family with fully resolved hyperparameters and a seed."""

    family: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        defaults = DEFAULT_HYPERPARAMS[self.family]
        unknown = set(self.hyperparams) - set(defaults)
        if unknown:
            raise ValueError(
                f"{self.family}: unknown hyperparameters {sorted(unknown)!r}"
            )
        merged = {**defaults, **self.hyperparams}
        if self.family == "knn" and merged["weights"] not in ("inverse_distance", "uniform"):
            raise ValueError(f"knn: unknown weights mode {merged['weights']!r}")
        object.__setattr__(self, "hyperparams", merged)


def default_specs(seed: int = 0) -> list[ModelSpec]:
    """One spec per family with the documented default hyperparameters."""
    return [ModelSpec(family=f, seed=seed) for f in FAMILIES]


@dataclass(frozen=True)
class TrainedModel:
    """A fitted model: spec, active-feature mask, and learned parameters.

    ``feature_mask`` has one entry per input column; prediction accepts the
    full layout and applies the mask internally.  ``standardization`` holds
    (mean, scale) over the active columns for families that need it.
    """

    spec: ModelSpec
    feature_mask: np.ndarray
    standardization: tuple[np.ndarray, np.ndarray] | None
    params: dict

    @property
    def n_features_in(self) -> int:
        return int(self.feature_mask.shape[0])


@dataclass(frozen=True)
class Metrics:
    mae: float
    mse: float
    mape: float


@dataclass(frozen=True)
class CVReport:
    fold_metrics: list[Metrics]
    mean: Metrics


def compute_metrics(y_true, y_pred) -> Metrics:
    """MAE, MSE, and MAPE of predictions against positive true values."""
    yt = np.asarray(y_true, dtype=np.float64)
    yp = np.asarray(y_pred, dtype=np.float64)
    if yt.ndim != 1 or yp.ndim != 1 or yt.shape[0] != yp.shape[0]:
        raise ValueError(f"length mismatch: {yt.shape} vs {yp.shape}")
    if yt.shape[0] < 1:
        raise ValueError("need at least one sample")
    if np.any(np.abs(yt) < 1e-9):
        raise ValueError("true values too close to zero for MAPE")
    diff = np.abs(yt - yp)
    return Metrics(
        mae=float(diff.mean()),
        mse=float(((yt - yp) ** 2).mean()),
        mape=float((diff / np.abs(yt)).mean()),
    )


def _check_matrix(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError(f"y shape {y.shape} does not match X rows {X.shape[0]}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise FitError("training data contains non-finite values")
    return X, y


def _resolve_mask(feature_mask, n_columns: int) -> np.ndarray:
    if feature_mask is None:
        return np.ones(n_columns, dtype=bool)
    mask = np.asarray(feature_mask, dtype=bool)
    if mask.shape != (n_columns,):
        raise ValueError(f"feature_mask shape {mask.shape} does not match {n_columns} columns")
    if not mask.any():
        raise ValueError("feature_mask selects no features")
    return mask


def fit(spec: ModelSpec, X, y, feature_mask=None) -> TrainedModel:
    """Train one model; deterministic given (spec, data, mask)."""
    X, y = _check_matrix(X, y)
    mask = _resolve_mask(feature_mask, X.shape[1])
    if X.shape[0] < _MIN_SAMPLES[spec.family]:
        raise FitError(
            f"{spec.family}: needs >= {_MIN_SAMPLES[spec.family]} samples, got {X.shape[0]}"
        )
    Xm = X[:, mask]
    standardization = None
    if spec.family in _STANDARDIZED_FAMILIES:
        mean, scale = _linear.standardize_fit(Xm)
        standardization = (mean, scale)
        Xm = _linear.standardize_apply(Xm, mean, scale)
    rng = np.random.default_rng(spec.seed)
    try:
        params = _FITTERS[spec.family](Xm, y, spec.hyperparams, rng)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"{spec.family}: degenerate data: {exc}") from exc
    return TrainedModel(
        spec=spec, feature_mask=mask, standardization=standardization, params=params
    )


def predict(model: TrainedModel, x):
    """Predict seconds for one full-layout vector or a 2-D batch of them."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = arr[None, :] if single else arr
    if X.ndim != 2 or X.shape[1] != model.n_features_in:
        raise ValueError(
            f"expected {model.n_features_in} features, got input shape {arr.shape}"
        )
    Xm = X[:, model.feature_mask]
    if model.standardization is not None:
        Xm = _linear.standardize_apply(Xm, *model.standardization)
    family = model.spec.family
    if family in LINEAR_FAMILIES:
        out = _linear.predict_linear(model.params, Xm)
    elif family == "knn":
        out = _neighbors.predict_knn(model.params, Xm)
    else:
        out = _trees.predict_tree_ensemble(model.params, Xm)
    return float(out[0]) if single else out


def kfold_seed(seed: int, *parts: int) -> int:
    """Stable seed derivation for nested deterministic work."""
    h = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    for p in parts:
        h = (h ^ np.uint64(p & 0xFFFFFFFFFFFFFFFF)) * np.uint64(0x100000001B3)
        h &= np.uint64(0xFFFFFFFFFFFFFFFF)
    return int(h)


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seed-derived partition of range(n) into k folds with sizes differing <= 1."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return [np.sort(fold) for fold in np.array_split(perm, k)]


def kfold_cv(spec: ModelSpec, X, y, k: int = 5, seed: int = 0, feature_mask=None) -> CVReport:
    """k-fold cross-validation of one spec; per-fold and mean metrics."""
    X, y = _check_matrix(X, y)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    n = X.shape[0]
    if n < k:
        raise ValueError(f"too few samples for {k}-fold CV: {n}")
    folds = kfold_indices(n, k, seed)
    fold_metrics: list[Metrics] = []
    for val_idx in folds:
        train_mask = np.ones(n, dtype=bool)
        train_mask[val_idx] = False
        model = fit(spec, X[train_mask], y[train_mask], feature_mask=feature_mask)
        y_pred = predict(model, X[val_idx])
        fold_metrics.append(compute_metrics(y[val_idx], y_pred))
    mean = Metrics(
        mae=float(np.mean([m.mae for m in fold_metrics])),
        mse=float(np.mean([m.mse for m in fold_metrics])),
        mape=float(np.mean([m.mape for m in fold_metrics])),
    )
    return CVReport(fold_metrics=fold_metrics, mean=mean)


def select_best_model(
    specs: Sequence[ModelSpec], X, y, k: int = 5, seed: int = 0, feature_mask=None
) -> tuple[ModelSpec, TrainedModel, CVReport]:
    """Pick the spec with minimum mean CV MAPE and refit it on all data.

    Ties resolve to the earlier family in canonical order.  A candidate that
    fails to fit is skipped with a warning; only all candidates failing is an
    error.
    """
    if not specs:
        raise ValueError("specs must be non-empty")
    results: list[tuple[float, int, int, ModelSpec, CVReport]] = []
    for i, spec in enumerate(specs):
        try:
            report = kfold_cv(spec, X, y, k=k, seed=seed, feature_mask=feature_mask)
        except FitError as exc:
            log.warning("skipping %s: %s", spec.family, exc)
            continue
        results.append((report.mean.mape, FAMILIES.index(spec.family), i, spec, report))
    if not results:
        raise FitError("all candidate specs failed to fit")
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    _, _, _, best_spec, best_report = results[0]
    model = fit(best_spec, X, y, feature_mask=feature_mask)
    return best_spec, model, best_report


@dataclass(frozen=True)
class PresetEntry:
    """Per-preset training outcome stored in a bundle."""

    model: TrainedModel
    metrics: Metrics  # mean CV metrics of the winning spec
    feature_mask: np.ndarray
    cv: CVReport


@dataclass
class PresetModelBundle:
    """Best trained model + metrics + feature mask for each of the 9 presets."""

    entries: dict[str, PresetEntry]
    feature_names: list[str]
    schema_version: int = 1

    def __getitem__(self, preset: str) -> PresetEntry:
        return self.entries[preset]

    def is_complete(self) -> bool:
        return set(self.entries) == set(PRESETS)


def train_all_presets(dataset, specs=None, k: int = 5, seed: int = 0) -> PresetModelBundle:
    """Train a separate best model per preset over the candidate spec list.

    The dataset must contain records for all 9 presets.  Per-preset CV seeds
    derive from (seed, preset ordinal) so that results do not depend on
    training order.
    """
    from ..features import feature_names  # local to avoid import cycle

    if specs is None:
        specs = default_specs(seed)
    groups = dataset.by_preset()
    missing = [p for p in PRESETS if p not in groups]
    if missing:
        raise ValueError(f"dataset is missing presets: {', '.join(missing)}")
    entries: dict[str, PresetEntry] = {}
    for preset in PRESETS:
        X, y, _ = groups[preset]
        cv_seed = kfold_seed(seed, ordinal(preset))
        _, model, report = select_best_model(specs, X, y, k=k, seed=cv_seed)
        entries[preset] = PresetEntry(
            model=model,
            metrics=report.mean,
            feature_mask=model.feature_mask.copy(),
            cv=report,
        )
        log.info(
            "preset %s: best=%s cv_mape=%.4f", preset, model.spec.family, report.mean.mape
        )
    return PresetModelBundle(entries=entries, feature_names=feature_names())


def evaluate_bundle(bundle: PresetModelBundle, dataset) -> dict[str, Metrics]:
    """Held-out metrics of each preset's model on a labelled dataset."""
    groups = dataset.by_preset()
    out: dict[str, Metrics] = {}
    for preset, (X, y, _) in groups.items():
        if preset not in bundle.entries:
            raise ValueError(f"bundle has no model for preset {preset!r}")
        y_pred = predict(bundle.entries[preset].model, X)
        out[preset] = compute_metrics(y, y_pred)
    return out
