"""Replay simulation: quantify the PSNR gain of budget-aware preset selection.

Given a ground-truth table of measured (transcoding time, PSNR) per
(chunk, preset), the simulator selects a preset per chunk either from the
measured times themselves (oracle mode, isolating the value of the selection
rule) or from model predictions (predicted mode, the deployable pipeline),
then compares the mean PSNR of the selection policy against the all-ultrafast
baseline.  Budget violations are always judged against measured times.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES
from .presets import PRESETS, is_preset
from .regression import PresetModelBundle
from .selector import BudgetSpec, predict_all_presets, select_preset


class GroundTruthError(ValueError):
    """Ground-truth table is malformed or missing a required cell."""


@dataclass
class GroundTruthTable:
    """Measured (time, psnr) cells keyed by (chunk_id, preset).

    ``chunk_ids`` preserves first-appearance order, which fixes the reporting
    order of the simulator.
    """

    cells: dict[tuple[str, str], tuple[float, float]]
    chunk_ids: list[str]

    def presets_for(self, chunk_id: str) -> list[str]:
        return [p for p in PRESETS if (chunk_id, p) in self.cells]

    def lookup(self, chunk_id: str, preset: str) -> tuple[float, float]:
        try:
            return self.cells[(chunk_id, preset)]
        except KeyError:
            raise GroundTruthError(
                f"ground truth has no cell for chunk {chunk_id!r}, preset {preset!r}"
            ) from None


GROUND_TRUTH_HEADER = ["chunk_id", "preset", "transcode_time", "psnr"]


def load_ground_truth(path: str | Path) -> GroundTruthTable:
    cells: dict[tuple[str, str], tuple[float, float]] = {}
    chunk_ids: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GROUND_TRUTH_HEADER:
            raise GroundTruthError(
                f"{path}: expected header {GROUND_TRUTH_HEADER!r}, got {header!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise GroundTruthError(f"{path}:{row_no}: expected 4 columns, got {len(row)}")
            chunk_id, preset, time_s, psnr_s = row
            if not is_preset(preset):
                raise GroundTruthError(f"{path}:{row_no}: unknown preset token {preset!r}")
            try:
                t, psnr = float(time_s), float(psnr_s)
            except ValueError:
                raise GroundTruthError(f"{path}:{row_no}: non-numeric value") from None
            if t <= 0 or psnr <= 0:
                raise GroundTruthError(f"{path}:{row_no}: time and psnr must be positive")
            key = (chunk_id, preset)
            if key in cells:
                raise GroundTruthError(
                    f"{path}:{row_no}: duplicate cell for chunk {chunk_id!r}, preset {preset!r}"
                )
            cells[key] = (t, psnr)
            if chunk_id not in chunk_ids:
                chunk_ids.append(chunk_id)
    if not cells:
        raise GroundTruthError(f"{path}: empty ground-truth table")
    return GroundTruthTable(cells=cells, chunk_ids=chunk_ids)


@dataclass(frozen=True)
class SimDecision:
    chunk_id: str
    chosen: str
    feasible: bool
    measured_time: float
    psnr: float
    violation: bool  # measured time of the chosen preset exceeds the budget


@dataclass(frozen=True)
class SimulationReport:
    mode: str
    budget: float
    decisions: list[SimDecision]
    policy_mean_psnr: float
    baseline_mean_psnr: float
    psnr_gain: float
    policy_total_time: float
    baseline_total_time: float
    violations: int


def _select_from_measured(table: GroundTruthTable, chunk_id: str, limit: float):
    available = table.presets_for(chunk_id)
    if not available:
        raise GroundTruthError(f"ground truth has no rows for chunk {chunk_id!r}")
    for preset in reversed(available):  # slowest available first
        if table.lookup(chunk_id, preset)[0] <= limit:
            return preset, True
    return PRESETS[0], False


def simulate(
    table: GroundTruthTable,
    budget: BudgetSpec,
    mode: str = "oracle",
    bundle: PresetModelBundle | None = None,
    features_by_chunk: dict[str, np.ndarray] | None = None,
    margin: float = 1.0,
) -> SimulationReport:
    """Replay selection over every chunk of the ground-truth table.

    Oracle mode selects over the measured times (restricted to the presets
    the table actually has for each chunk); predicted mode selects over model
    predictions for all nine presets and then reads the chosen preset's
    measured cell, which must exist.
    """
    if mode not in ("oracle", "predicted"):
        raise ValueError(f"mode must be 'oracle' or 'predicted', got {mode!r}")
    if mode == "predicted":
        if bundle is None or features_by_chunk is None:
            raise ValueError("predicted mode needs a bundle and per-chunk features")
    limit = budget.budget
    decisions: list[SimDecision] = []
    policy_psnrs: list[float] = []
    baseline_psnrs: list[float] = []
    policy_times: list[float] = []
    baseline_times: list[float] = []
    violations = 0
    for chunk_id in table.chunk_ids:
        if mode == "oracle":
            chosen, feasible = _select_from_measured(table, chunk_id, limit)
        else:
            try:
                feats = features_by_chunk[chunk_id]
            except KeyError:
                raise ValueError(f"no features provided for chunk {chunk_id!r}") from None
            predicted, _ = predict_all_presets(bundle, feats)
            decision = select_preset(predicted, budget, margin=margin, chunk_id=chunk_id)
            chosen, feasible = decision.chosen, decision.feasible
        t, psnr = table.lookup(chunk_id, chosen)
        violation = t > limit
        violations += violation
        decisions.append(
            SimDecision(
                chunk_id=chunk_id,
                chosen=chosen,
                feasible=feasible,
                measured_time=t,
                psnr=psnr,
                violation=violation,
            )
        )
        policy_psnrs.append(psnr)
        policy_times.append(t)
        base_t, base_psnr = table.lookup(chunk_id, PRESETS[0])
        baseline_psnrs.append(base_psnr)
        baseline_times.append(base_t)
    policy_mean = sum(policy_psnrs) / len(policy_psnrs)
    baseline_mean = sum(baseline_psnrs) / len(baseline_psnrs)
    return SimulationReport(
        mode=mode,
        budget=limit,
        decisions=decisions,
        policy_mean_psnr=policy_mean,
        baseline_mean_psnr=baseline_mean,
        psnr_gain=policy_mean - baseline_mean,
        policy_total_time=float(sum(policy_times)),
        baseline_total_time=float(sum(baseline_times)),
        violations=violations,
    )


FEATURES_CSV_HEADER = ["chunk_id", *FEATURE_NAMES]


def load_features_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Per-chunk canonical feature vectors: header ``chunk_id,<19 names>``."""
    out: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FEATURES_CSV_HEADER:
            raise ValueError(f"{path}: expected header {FEATURES_CSV_HEADER!r}, got {header!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FEATURES_CSV_HEADER):
                raise ValueError(f"{path}:{row_no}: wrong column count")
            try:
                vec = np.array([float(v) for v in row[1:]], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}:{row_no}: non-numeric feature value") from None
            if not np.isfinite(vec).all():
                raise ValueError(f"{path}:{row_no}: non-finite feature value")
            out[row[0]] = vec
    return out


def write_features_csv(path: str | Path, features_by_chunk: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURES_CSV_HEADER)
        for chunk_id, vec in features_by_chunk.items():
            writer.writerow([chunk_id] + [repr(float(v)) for v in vec])
