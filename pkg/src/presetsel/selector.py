"""Live preset selection: budget accounting and slowest-feasible choice.

The live budget for one chunk is its playback duration minus the prediction
overhead (feature extraction plus the slowest single predictor, since the
per-preset predictors run in parallel).  Selection scans presets from slowest
to fastest and takes the first whose predicted transcoding time fits the
budget; when even ultrafast does not fit, ultrafast is still chosen and the
decision is flagged infeasible, because the all-ultrafast pipeline is the
safe floor.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .presets import PRESETS
from .regression import PresetModelBundle, predict


@dataclass(frozen=True)
class BudgetSpec:
    """Per-chunk transcoding time budget = duration - prediction overhead."""

    chunk_duration: float
    prediction_overhead: float

    @property
    def budget(self) -> float:
        return self.chunk_duration - self.prediction_overhead


def compute_budget(chunk_duration: float, prediction_overhead: float = 0.0) -> BudgetSpec:
    if prediction_overhead < 0:
        raise ValueError(f"prediction_overhead must be >= 0, got {prediction_overhead}")
    if chunk_duration <= prediction_overhead:
        raise ValueError(
            f"non-positive budget: duration {chunk_duration} <= overhead {prediction_overhead}"
        )
    return BudgetSpec(chunk_duration=chunk_duration, prediction_overhead=prediction_overhead)


@dataclass(frozen=True)
class LatencyRecord:
    feature_extract: float = 0.0
    predictor_max: float = 0.0

    @property
    def total(self) -> float:
        return self.feature_extract + self.predictor_max


@dataclass(frozen=True)
class SelectionDecision:
    chosen: str
    predicted_times: dict[str, float]
    budget: float
    feasible: bool
    latency: LatencyRecord = field(default_factory=LatencyRecord)
    chunk_id: str = ""


def predict_all_presets(
    bundle: PresetModelBundle, features: np.ndarray, feature_extract_seconds: float = 0.0
) -> tuple[dict[str, float], LatencyRecord]:
    """One prediction per preset with that preset's model and feature mask.

    Also reports latency: the max single-model wall time stands in for the
    predictor stage (the per-preset predictors are independent and can run in
    parallel), plus the caller-measured feature extraction time.
    """
    missing = [p for p in PRESETS if p not in bundle.entries]
    if missing:
        raise ValueError(f"bundle is missing presets: {', '.join(missing)}")
    times: dict[str, float] = {}
    slowest = 0.0
    for preset in PRESETS:
        start = time.perf_counter()
        times[preset] = float(predict(bundle.entries[preset].model, features))
        slowest = max(slowest, time.perf_counter() - start)
    return times, LatencyRecord(feature_extract=feature_extract_seconds, predictor_max=slowest)


def select_preset(
    predicted: dict[str, float],
    budget: BudgetSpec,
    margin: float = 1.0,
    latency: LatencyRecord | None = None,
    chunk_id: str = "",
) -> SelectionDecision:
    """Choose the slowest preset whose (margin-inflated) prediction fits the budget.

    Total over finite inputs: with no feasible preset the decision falls back
    to ultrafast with ``feasible=False`` rather than raising.
    """
    missing = [p for p in PRESETS if p not in predicted]
    if missing:
        raise ValueError(f"missing predicted times for presets: {', '.join(missing)}")
    for preset in PRESETS:
        if not math.isfinite(predicted[preset]):
            raise ValueError(f"non-finite predicted time for {preset}: {predicted[preset]!r}")
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    limit = budget.budget
    for preset in reversed(PRESETS):  # veryslow first
        if predicted[preset] * margin <= limit:
            return SelectionDecision(
                chosen=preset,
                predicted_times=dict(predicted),
                budget=limit,
                feasible=True,
                latency=latency or LatencyRecord(),
                chunk_id=chunk_id,
            )
    return SelectionDecision(
        chosen=PRESETS[0],
        predicted_times=dict(predicted),
        budget=limit,
        feasible=False,
        latency=latency or LatencyRecord(),
        chunk_id=chunk_id,
    )


def aggregate_chunk_results(times, psnrs) -> tuple[float, float]:
    """Whole-video rollup: total transcoding time and mean PSNR over chunks."""
    times = list(times)
    psnrs = list(psnrs)
    if not times or len(times) != len(psnrs):
        raise ValueError(
            f"times and psnrs must be equal non-empty lengths, got {len(times)} and {len(psnrs)}"
        )
    return float(sum(times)), float(sum(psnrs) / len(psnrs))


DECISION_HEADER = ["chunk_id", "chosen", "feasible", "budget", *PRESETS, "latency_total"]


def decision_csv_row(decision: SelectionDecision) -> list[str]:
    """Serialize one decision in the DECISION_HEADER column order."""
    return [
        decision.chunk_id,
        decision.chosen,
        "true" if decision.feasible else "false",
        repr(decision.budget),
        *[repr(decision.predicted_times[p]) for p in PRESETS],
        repr(decision.latency.total),
    ]
