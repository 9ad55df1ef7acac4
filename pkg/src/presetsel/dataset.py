"""Training dataset assembly, persistence, splitting, and synthesis.

A dataset row is (chunk features, preset, measured transcoding time).  Rows
are built either by timing a real external transcoder command around
already-chunked inputs (:func:`assemble_dataset`) or by the synthetic
generator (:func:`generate_synthetic`), whose ground-truth timing formula is
documented and exported so tests can use it as an oracle.

Dataset CSV schema: header ``chunk_id,preset,transcode_time,<19 canonical
feature names>``; preset as lowercase token; numbers written with ``repr`` so
values round-trip exactly through text.
"""

from __future__ import annotations

import csv
import logging
import shlex
import statistics
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, N_FEATURES, extract_features, DEFAULT_CODEBOOK
from .presets import PRESETS, is_preset, ordinal
from .stats import ChunkStats

log = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    """Dataset CSV does not conform to the documented schema."""


class TranscodeError(RuntimeError):
    """External transcoder command failed; carries the exit status."""

    def __init__(self, message: str, returncode: int):
        super().__init__(message)
        self.returncode = returncode


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    """One training row: features, preset, and measured transcoding time."""

    chunk_id: str
    preset: str
    transcode_time: float  # seconds, > 0
    features: np.ndarray  # shape (N_FEATURES,), canonical order

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatasetRecord):
            return NotImplemented
        return (
            self.chunk_id == other.chunk_id
            and self.preset == other.preset
            and self.transcode_time == other.transcode_time
            and np.array_equal(self.features, other.features)
        )


@dataclass
class Dataset:
    records: list[DatasetRecord]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def presets_present(self) -> set[str]:
        return {r.preset for r in self.records}

    def by_preset(self) -> dict[str, tuple[np.ndarray, np.ndarray, list[str]]]:
        """Partition into per-preset (X, y, chunk_ids), presets in slowness order."""
        grouped: dict[str, list[DatasetRecord]] = {}
        for rec in self.records:
            grouped.setdefault(rec.preset, []).append(rec)
        out = {}
        for preset in PRESETS:
            if preset not in grouped:
                continue
            rows = grouped[preset]
            X = np.stack([r.features for r in rows])
            y = np.array([r.transcode_time for r in rows], dtype=np.float64)
            out[preset] = (X, y, [r.chunk_id for r in rows])
        return out


DATASET_HEADER = ["chunk_id", "preset", "transcode_time", *FEATURE_NAMES]


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_HEADER)
        for rec in dataset.records:
            writer.writerow(
                [rec.chunk_id, rec.preset, repr(rec.transcode_time)]
                + [repr(float(v)) for v in rec.features]
            )


def load_dataset(path: str | Path) -> Dataset:
    """Load a dataset CSV; save -> load is value-identity.

    Raises :class:`DatasetFormatError` on schema mismatch, unknown preset
    tokens, or non-positive transcoding times.
    """
    records: list[DatasetRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file") from None
        if header != DATASET_HEADER:
            raise DatasetFormatError(
                f"{path}: schema mismatch: expected header {DATASET_HEADER!r}, got {header!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(DATASET_HEADER):
                raise DatasetFormatError(
                    f"{path}:{row_no}: expected {len(DATASET_HEADER)} columns, got {len(row)}"
                )
            chunk_id, preset, time_s = row[0], row[1], row[2]
            if not is_preset(preset):
                raise DatasetFormatError(f"{path}:{row_no}: unknown preset token {preset!r}")
            try:
                transcode_time = float(time_s)
                feats = np.array([float(v) for v in row[3:]], dtype=np.float64)
            except ValueError:
                raise DatasetFormatError(f"{path}:{row_no}: non-numeric value") from None
            if transcode_time <= 0:
                raise DatasetFormatError(
                    f"{path}:{row_no}: non-positive transcode_time {time_s}"
                )
            records.append(DatasetRecord(chunk_id, preset, transcode_time, feats))
    return Dataset(records=records, provenance=str(path))


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint train/test split; sizes round(n*fraction) and rest."""
    if not dataset.records:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(dataset.records)
    n_train = int(np.floor(n * train_fraction + 0.5))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = Dataset(
        records=[dataset.records[i] for i in train_idx],
        provenance=f"{dataset.provenance}[train]",
    )
    test = Dataset(
        records=[dataset.records[i] for i in test_idx],
        provenance=f"{dataset.provenance}[test]",
    )
    return train, test


# --- synthetic data -------------------------------------------------------

# Base transcoding time per preset ordinal, strictly increasing in slowness.
SYNTHETIC_BASE_TIME = (0.20, 0.23, 0.27, 0.33, 0.40, 0.50, 0.70, 0.95, 1.40)

# Normalization constants for the synthetic load terms (roughly the upper end
# of the generated feature ranges).
_MB_SCALE = 9.0e5
_HEAVY_PART_SCALE = 4.5e5
_MV_COUNT_SCALE = 2.5e5
_MV_MEAN_SCALE = 40.0
_BITRATE_SCALE = 8000.0


def synthetic_time(features: np.ndarray, preset: str) -> float:
    """Noise-free ground-truth transcoding time of the synthetic generator.

    time = base(preset) * load * interaction, with

        load = 1 + 0.8*mb_total/9e5 + 0.5*heavy_partitions/4.5e5
                 + 0.7*mv_count/2.5e5 + 0.3*mv_mean/40
                 + 0.2*output_bitrate/8000
        interaction = 1 + 0.1 * (mv_count/2.5e5) * (heavy_partitions/4.5e5)

    where mb_total sums features 2-5 and heavy_partitions sums the 8x8 and
    4x4 partition counts.  All terms are non-negative with positive weights,
    so the time is monotonically increasing in preset slowness, macroblock
    totals, motion vector count, and mean motion magnitude.
    """
    f = np.asarray(features, dtype=np.float64)
    mb_total = f[2] + f[3] + f[4] + f[5]
    heavy = f[9] + f[10]
    load = (
        1.0
        + 0.8 * mb_total / _MB_SCALE
        + 0.5 * heavy / _HEAVY_PART_SCALE
        + 0.7 * f[12] / _MV_COUNT_SCALE
        + 0.3 * f[13] / _MV_MEAN_SCALE
        + 0.2 * f[18] / _BITRATE_SCALE
    )
    interaction = 1.0 + 0.1 * (f[12] / _MV_COUNT_SCALE) * (heavy / _HEAVY_PART_SCALE)
    return SYNTHETIC_BASE_TIME[ordinal(preset)] * load * interaction


_SAR_CHOICES = (1.0, 4.0 / 3.0, 16.0 / 11.0, 40.0 / 33.0, 64.0 / 45.0)


def _synthetic_features(rng: np.random.Generator) -> np.ndarray:
    vec = np.zeros(N_FEATURES, dtype=np.float64)
    n_b = int(rng.integers(0, 90))
    n_p = int(rng.integers(1, 120 - n_b))
    vec[0] = n_b
    vec[1] = n_p
    vec[2] = float(rng.integers(2_000, 40_000))
    vec[3] = float(rng.integers(20_000, 400_000))
    vec[4] = float(rng.integers(0, 300_000))
    vec[5] = float(rng.integers(0, 150_000))
    part_total = vec[2] + vec[3] + vec[4] + vec[5]
    shares = rng.dirichlet(np.ones(5))
    vec[6:11] = np.floor(shares * part_total)
    vec[11] = rng.choice(_SAR_CHOICES)
    vec[12] = float(rng.integers(0, 250_000))
    vec[13] = float(rng.uniform(0.5, _MV_MEAN_SCALE)) if vec[12] > 0 else 0.0
    vec[14] = float(rng.integers(1, 3))
    vec[15] = float(rng.integers(1, 9))
    vec[16] = float(rng.integers(1, 9))
    vec[17] = float(rng.integers(1, 10))
    vec[18] = float(np.round(rng.uniform(2000.0, 8000.0), 1))
    return vec


def generate_synthetic(n_chunks: int, noise_level: float = 0.0, seed: int = 0) -> Dataset:
    """Generate a fully reproducible synthetic dataset.

    Emits one record per (synthetic chunk x 9 presets).  The measured time is
    :func:`synthetic_time` multiplied by (1 + eps) with eps drawn uniformly
    from [-noise_level, +noise_level] independently per record.
    """
    if n_chunks <= 0:
        raise ValueError(f"n_chunks must be positive, got {n_chunks}")
    if not 0.0 <= noise_level < 1.0:
        raise ValueError(f"noise_level must be in [0, 1), got {noise_level}")
    rng = np.random.default_rng(seed)
    records: list[DatasetRecord] = []
    for i in range(n_chunks):
        feats = _synthetic_features(rng)
        feats.flags.writeable = False
        chunk_id = f"syn-{i:05d}"
        for preset in PRESETS:
            eps = rng.uniform(-noise_level, noise_level) if noise_level > 0 else 0.0
            t = synthetic_time(feats, preset) * (1.0 + eps)
            records.append(DatasetRecord(chunk_id, preset, float(t), feats))
    return Dataset(records=records, provenance=f"synthetic(n={n_chunks},seed={seed})")


# --- measurement harness --------------------------------------------------

_PLACEHOLDERS = ("{input}", "{preset}", "{bitrate}", "{output}")


def measure_transcode(
    command_template: str,
    input_path: str | Path,
    preset: str,
    output_bitrate: float,
    repeat: int = 1,
) -> float:
    """Run the external transcoder once (or ``repeat`` times) and time it.

    The template must contain the placeholders {input} {preset} {bitrate}
    {output}.  Returns elapsed wall-clock seconds (median over repeats).
    Runs are serialized: concurrent transcodes would contaminate wall-clock
    measurements.
    """
    for ph in _PLACEHOLDERS:
        if ph not in command_template:
            raise ValueError(f"command template is missing the {ph} placeholder")
    ordinal(preset)  # validates
    if repeat < 1:
        raise ValueError(f"repeat must be >= 1, got {repeat}")
    bitrate_s = f"{output_bitrate:g}"
    elapsed: list[float] = []
    with tempfile.TemporaryDirectory(prefix="presetsel-") as tmp:
        out_path = str(Path(tmp) / "transcoded.out")
        command = command_template.format(
            input=str(input_path), preset=preset, bitrate=bitrate_s, output=out_path
        )
        argv = shlex.split(command)
        for _ in range(repeat):
            start = time.perf_counter()
            proc = subprocess.run(argv, capture_output=True)
            wall = time.perf_counter() - start
            if proc.returncode != 0:
                stderr_tail = proc.stderr.decode("utf-8", "replace").strip()[-500:]
                raise TranscodeError(
                    f"transcode command exited with status {proc.returncode}: {stderr_tail}",
                    returncode=proc.returncode,
                )
            elapsed.append(wall)
    return statistics.median(elapsed)


def assemble_dataset(
    chunks: list[tuple[ChunkStats, str | Path]],
    bitrates: list[float],
    command_template: str,
    codebook=DEFAULT_CODEBOOK,
    repeat: int = 1,
) -> Dataset:
    """Measure every (chunk x bitrate x preset) cell into a Dataset.

    ``chunks`` pairs each parsed ChunkStats with the media file path handed to
    the transcoder command.  Records for the same chunk at different bitrates
    share all features except output_bitrate.
    """
    if not chunks:
        raise ValueError("chunks must be non-empty")
    if not bitrates:
        raise ValueError("bitrates must be non-empty")
    records: list[DatasetRecord] = []
    for chunk, media_path in chunks:
        for bitrate in bitrates:
            feats = extract_features(chunk, bitrate, codebook)
            feats.flags.writeable = False
            for preset in PRESETS:
                try:
                    t = measure_transcode(
                        command_template, media_path, preset, bitrate, repeat=repeat
                    )
                except TranscodeError as exc:
                    raise TranscodeError(
                        f"measurement failed for chunk={chunk.chunk_id!r} "
                        f"preset={preset} bitrate={bitrate:g}: {exc}",
                        returncode=exc.returncode,
                    ) from exc
                records.append(DatasetRecord(chunk.chunk_id, preset, t, feats))
    return Dataset(records=records, provenance="measured")
