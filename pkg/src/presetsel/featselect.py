"""Per-preset recursive feature elimination with cross-validation.

The elimination loop starts from the full feature set, scores each subset
size by k-fold CV (score = negative mean MAPE, so larger is better), drops
the single least-important feature per round, and keeps the best-scoring
subset.  Importance comes from the model itself where it has a native notion
(impurity decrease for trees, |standardized coefficient| for linear models)
and from permutation otherwise.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .presets import PRESETS, ordinal
from .regression import (
    CVReport,
    LINEAR_FAMILIES,
    TREE_FAMILIES,
    ModelSpec,
    PresetEntry,
    PresetModelBundle,
    TrainedModel,
    compute_metrics,
    fit,
    kfold_cv,
    kfold_seed,
    predict,
)

log = logging.getLogger(__name__)

PERMUTATION_SHUFFLES = 5


@dataclass(frozen=True)
class ImportanceReport:
    """Scores and 1-based ranks (1 = most important) for a model's active features.

    ``feature_indices`` are global column indices; ties rank the earlier
    column first so ranks are always a permutation of 1..len(active).
    """

    feature_indices: list[int]
    scores: np.ndarray
    ranks: np.ndarray

    def rank_of(self, feature_index: int) -> int:
        pos = self.feature_indices.index(feature_index)
        return int(self.ranks[pos])


def _rank_scores(scores: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    ranks = np.empty(scores.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, scores.shape[0] + 1)
    return ranks


def _permutation_importance(
    model: TrainedModel, X: np.ndarray, y: np.ndarray, active: np.ndarray, seed: int
) -> np.ndarray:
    rng = np.random.default_rng(seed)
    baseline = compute_metrics(y, predict(model, X)).mape
    scores = np.zeros(active.shape[0])
    for i, col in enumerate(active):
        deltas = []
        for _ in range(PERMUTATION_SHUFFLES):
            Xp = X.copy()
            Xp[:, col] = Xp[rng.permutation(X.shape[0]), col]
            deltas.append(compute_metrics(y, predict(model, Xp)).mape - baseline)
        scores[i] = max(float(np.mean(deltas)), 0.0)
    return scores


def feature_importance(model: TrainedModel, X, y, seed: int = 0) -> ImportanceReport:
    """Score the model's active features, most informative first by rank.

    Tree families report impurity-decrease importance normalized to sum 1
    (all zeros when no split exists); linear families (except huber) report
    absolute standardized coefficients; knn and huber use permutation
    importance (mean MAPE increase over shuffles).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features_in:
        raise ValueError(
            f"X layout {X.shape} does not match model ({model.n_features_in} features)"
        )
    active = np.nonzero(model.feature_mask)[0]
    family = model.spec.family
    if family in TREE_FAMILIES:
        raw = model.params["importances"]
        total = raw.sum()
        scores = raw / total if total > 0 else np.zeros_like(raw)
    elif family in LINEAR_FAMILIES and family != "huber":
        scores = np.abs(model.params["coef"])
    else:
        scores = _permutation_importance(model, X, np.asarray(y, dtype=np.float64), active, seed)
    return ImportanceReport(
        feature_indices=[int(i) for i in active],
        scores=np.asarray(scores, dtype=np.float64),
        ranks=_rank_scores(np.asarray(scores, dtype=np.float64)),
    )


@dataclass(frozen=True)
class RfecvResult:
    """Outcome of one RFECV sweep.

    ``score_curve`` maps subset size to mean CV score (negative mean MAPE);
    ``best_size`` is its argmax with ties resolved to the larger size;
    ``selected_mask`` restores the mask that was active at ``best_size``;
    ``elimination_order`` lists dropped column indices, first-removed first.
    """

    selected_mask: np.ndarray
    score_curve: dict[int, float]
    best_size: int
    elimination_order: list[int]
    reports_by_size: dict[int, CVReport]


def rfecv(spec: ModelSpec, X, y, k: int = 5, seed: int = 0) -> RfecvResult:
    """Recursive feature elimination over all subset sizes down to 1.

    The same seed-derived fold partition scores every subset size, so curve
    points are directly comparable.  Per round the single least-important
    feature is dropped; importance ties drop the later column in canonical
    order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"X must be 2-D with >= 1 feature, got shape {X.shape}")
    n_features = X.shape[1]
    mask = np.ones(n_features, dtype=bool)
    score_curve: dict[int, float] = {}
    reports_by_size: dict[int, CVReport] = {}
    masks_by_size: dict[int, np.ndarray] = {}
    elimination_order: list[int] = []
    for size in range(n_features, 0, -1):
        report = kfold_cv(spec, X, y, k=k, seed=seed, feature_mask=mask)
        score_curve[size] = -report.mean.mape
        reports_by_size[size] = report
        masks_by_size[size] = mask.copy()
        if size == 1:
            break
        model = fit(spec, X, y, feature_mask=mask)
        imp = feature_importance(model, X, y, seed=kfold_seed(seed, size))
        min_score = imp.scores.min()
        tied = [f for f, s in zip(imp.feature_indices, imp.scores) if s == min_score]
        drop = max(tied)
        mask[drop] = False
        elimination_order.append(drop)
    best_size = max(score_curve, key=lambda s: (score_curve[s], s))
    return RfecvResult(
        selected_mask=masks_by_size[best_size],
        score_curve=score_curve,
        best_size=best_size,
        elimination_order=elimination_order,
        reports_by_size=reports_by_size,
    )


@dataclass(frozen=True)
class IndicatorTable:
    """Cross-preset inverse-rank importance: values[i, j] = 1 / rank(feature i, preset j)."""

    feature_indices: list[int]
    presets: list[str]
    values: np.ndarray


def cross_preset_indicator(rankings: dict[str, ImportanceReport]) -> IndicatorTable:
    """Combine per-preset rankings into the 1/rank indicator table."""
    if not rankings:
        raise ValueError("rankings must be non-empty")
    presets = list(rankings)
    first = rankings[presets[0]]
    for preset, report in rankings.items():
        if report.feature_indices != first.feature_indices:
            raise ValueError(f"importance report for {preset!r} has a different feature layout")
    values = np.empty((len(first.feature_indices), len(presets)))
    for j, preset in enumerate(presets):
        values[:, j] = 1.0 / rankings[preset].ranks
    return IndicatorTable(
        feature_indices=list(first.feature_indices), presets=presets, values=values
    )


def retrain_with_selected(
    bundle: PresetModelBundle, dataset, k: int = 5, seed: int = 0
) -> tuple[PresetModelBundle, list[tuple]]:
    """RFECV per preset with its winning family, then refit on the kept features.

    Returns the retrained bundle and report rows
    (preset, n_selected, n_total, mape_before, mape_after), where before/after
    are the full-set and selected-set points of the same CV sweep.
    """
    groups = dataset.by_preset()
    missing = [p for p in PRESETS if p not in groups]
    if missing:
        raise ValueError(f"dataset is missing presets: {', '.join(missing)}")
    entries: dict[str, PresetEntry] = {}
    rows: list[tuple] = []
    for preset in PRESETS:
        if preset not in bundle.entries:
            raise ValueError(f"bundle has no model for preset {preset!r}")
        X, y, _ = groups[preset]
        spec = bundle.entries[preset].model.spec
        result = rfecv(spec, X, y, k=k, seed=kfold_seed(seed, ordinal(preset)))
        model = fit(spec, X, y, feature_mask=result.selected_mask)
        n_total = X.shape[1]
        mape_before = -result.score_curve[n_total]
        mape_after = -result.score_curve[result.best_size]
        report = result.reports_by_size[result.best_size]
        entries[preset] = PresetEntry(
            model=model,
            metrics=report.mean,
            feature_mask=result.selected_mask.copy(),
            cv=report,
        )
        rows.append((preset, result.best_size, n_total, mape_before, mape_after))
        log.info(
            "preset %s: kept %d/%d features, mape %.4f -> %.4f",
            preset, result.best_size, n_total, mape_before, mape_after,
        )
    new_bundle = PresetModelBundle(
        entries=entries,
        feature_names=list(bundle.feature_names),
        schema_version=bundle.schema_version,
    )
    return new_bundle, rows


def write_score_curve_csv(result: RfecvResult, path: str | Path) -> None:
    """Score curve as CSV; the score column is negative mean CV MAPE."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subset_size", "score_neg_mean_mape"])
        for size in sorted(result.score_curve):
            writer.writerow([size, repr(result.score_curve[size])])


def write_indicator_csv(
    table: IndicatorTable, path: str | Path, feature_names: list[str] | None = None
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", *table.presets])
        for i, feat in enumerate(table.feature_indices):
            label = feature_names[feat] if feature_names else f"f{feat}"
            writer.writerow([label] + [repr(v) for v in table.values[i]])
