"""Dataset persistence, splitting, synthesis, and the measurement harness."""

import numpy as np
import pytest

from presetsel import (
    DatasetFormatError,
    TranscodeError,
    assemble_dataset,
    generate_synthetic,
    load_dataset,
    measure_transcode,
    save_dataset,
    split_dataset,
    synthetic_time,
)
from presetsel.dataset import Dataset
from presetsel.presets import PRESETS, ordinal

from conftest import make_random_chunk

SLEEP_STUB = "sh -c 'sleep 0.1' stub {input} {preset} {bitrate} {output}"
FAIL_STUB = "sh -c 'exit 7' stub {input} {preset} {bitrate} {output}"
NOOP_STUB = "sh -c 'true' stub {input} {preset} {bitrate} {output}"


def test_save_load_roundtrip(tmp_path):
    data = generate_synthetic(n_chunks=2, noise_level=0.05, seed=3)
    assert len(data) == 18
    path = tmp_path / "data.csv"
    save_dataset(data, path)
    loaded = load_dataset(path)
    assert len(loaded) == len(data)
    for a, b in zip(loaded.records, data.records):
        assert a == b


def test_load_rejects_placebo(tmp_path):
    data = generate_synthetic(n_chunks=1, seed=0)
    path = tmp_path / "data.csv"
    save_dataset(data, path)
    text = path.read_text().replace("ultrafast", "placebo")
    path.write_text(text)
    with pytest.raises(DatasetFormatError, match="unknown preset token"):
        load_dataset(path)


def test_load_rejects_zero_time(tmp_path):
    data = generate_synthetic(n_chunks=1, seed=0)
    path = tmp_path / "data.csv"
    save_dataset(data, path)
    lines = path.read_text().splitlines()
    cells = lines[1].split(",")
    cells[2] = "0.0"
    lines[1] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="non-positive"):
        load_dataset(path)


def test_load_rejects_schema_mismatch(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("chunk_id,preset,seconds\nx,ultrafast,1.0\n")
    with pytest.raises(DatasetFormatError, match="schema mismatch"):
        load_dataset(path)


def test_split_paper_scale_sizes():
    records = generate_synthetic(n_chunks=97, seed=1).records[:872]
    data = Dataset(records=records)
    train, test = split_dataset(data, 658 / 872, seed=123)
    assert (len(train), len(test)) == (658, 214)


def test_split_deterministic_and_exact():
    data = generate_synthetic(n_chunks=10, seed=2)
    a_train, a_test = split_dataset(data, 0.5, seed=9)
    b_train, b_test = split_dataset(data, 0.5, seed=9)
    assert [r.chunk_id for r in a_train.records] == [r.chunk_id for r in b_train.records]
    assert len(a_train) == len(a_test) == 45
    # disjoint partition whose union is the input
    ids = lambda d: [(r.chunk_id, r.preset) for r in d.records]
    assert sorted(ids(a_train) + ids(a_test)) == sorted(ids(data))
    assert set(ids(a_train)).isdisjoint(ids(a_test))


def test_split_ten_records_half():
    data = Dataset(records=generate_synthetic(n_chunks=2, seed=4).records[:10])
    train, test = split_dataset(data, 0.5, seed=0)
    assert (len(train), len(test)) == (5, 5)


def test_split_preconditions():
    data = generate_synthetic(n_chunks=1, seed=0)
    with pytest.raises(ValueError):
        split_dataset(data, 0.0, seed=0)
    with pytest.raises(ValueError):
        split_dataset(data, 1.0, seed=0)
    with pytest.raises(ValueError):
        split_dataset(Dataset(records=[]), 0.5, seed=0)


def test_synthetic_reproducible():
    a = generate_synthetic(n_chunks=5, noise_level=0.03, seed=42)
    b = generate_synthetic(n_chunks=5, noise_level=0.03, seed=42)
    for ra, rb in zip(a.records, b.records):
        assert ra == rb


def test_synthetic_noise_free_matches_formula():
    data = generate_synthetic(n_chunks=4, noise_level=0.0, seed=5)
    for rec in data.records:
        assert rec.transcode_time == synthetic_time(rec.features, rec.preset)


def test_synthetic_record_count():
    assert len(generate_synthetic(n_chunks=100, seed=0)) == 900


def test_synthetic_strictly_increasing_in_slowness():
    data = generate_synthetic(n_chunks=6, noise_level=0.0, seed=8)
    by_chunk = {}
    for rec in data.records:
        by_chunk.setdefault(rec.chunk_id, {})[rec.preset] = rec.transcode_time
    for times in by_chunk.values():
        ordered = [times[p] for p in PRESETS]
        assert all(a < b for a, b in zip(ordered, ordered[1:]))


def test_synthetic_monotone_in_motion_and_mb():
    data = generate_synthetic(n_chunks=1, noise_level=0.0, seed=3)
    base = data.records[0].features.copy()
    for idx in (2, 3, 4, 5, 12, 13):
        bumped = base.copy()
        bumped[idx] += 100.0
        assert synthetic_time(bumped, "medium") > synthetic_time(base, "medium")


def test_synthetic_noise_bounded():
    noisy = generate_synthetic(n_chunks=10, noise_level=0.05, seed=6)
    for rec in noisy.records:
        truth = synthetic_time(rec.features, rec.preset)
        assert abs(rec.transcode_time / truth - 1.0) <= 0.05


def test_synthetic_preconditions():
    with pytest.raises(ValueError):
        generate_synthetic(n_chunks=0)
    with pytest.raises(ValueError):
        generate_synthetic(n_chunks=1, noise_level=-0.1)


def test_measure_transcode_sleep_stub(tmp_path):
    t = measure_transcode(SLEEP_STUB, tmp_path / "in.bin", "medium", 6000.0)
    assert t == pytest.approx(0.1, abs=0.05)


def test_measure_transcode_error_carries_status(tmp_path):
    with pytest.raises(TranscodeError) as exc_info:
        measure_transcode(FAIL_STUB, tmp_path / "in.bin", "fast", 6000.0)
    assert exc_info.value.returncode == 7


def test_measure_transcode_missing_placeholder(tmp_path):
    with pytest.raises(ValueError, match="preset"):
        measure_transcode("sh -c true {input} {bitrate} {output}", tmp_path / "x", "fast", 1.0)


def test_measure_transcode_repeat_median(tmp_path):
    t = measure_transcode(SLEEP_STUB, tmp_path / "in.bin", "slow", 4000.0, repeat=3)
    assert t == pytest.approx(0.1, abs=0.05)


def test_assemble_dataset_counts(tmp_path):
    rng = np.random.default_rng(1)
    chunks = [
        (make_random_chunk(rng, n_frames=3, chunk_id=f"c{i}"), tmp_path / f"c{i}.bin")
        for i in range(2)
    ]
    data = assemble_dataset(chunks, [6000.0, 4000.0], NOOP_STUB)
    assert len(data) == 36  # 2 chunks x 2 bitrates x 9 presets
    presets_per_chunk = {}
    for rec in data.records:
        presets_per_chunk.setdefault(rec.chunk_id, set()).add(rec.preset)
    assert all(s == set(PRESETS) for s in presets_per_chunk.values())


def test_assemble_dataset_stub_duration(tmp_path):
    rng = np.random.default_rng(2)
    chunks = [(make_random_chunk(rng, n_frames=2, chunk_id="c"), tmp_path / "c.bin")]
    data = assemble_dataset(chunks, [6000.0], SLEEP_STUB)
    assert len(data) == 9
    for rec in data.records:
        assert rec.transcode_time == pytest.approx(0.1, abs=0.05)


def test_assemble_dataset_bitrate_only_changes_index18(tmp_path):
    rng = np.random.default_rng(3)
    chunks = [(make_random_chunk(rng, n_frames=2, chunk_id="c"), tmp_path / "c.bin")]
    data = assemble_dataset(chunks, [6000.0, 4000.0], NOOP_STUB)
    by_key = {(r.preset, r.features[18]): r for r in data.records}
    for preset in PRESETS:
        a = by_key[(preset, 6000.0)].features
        b = by_key[(preset, 4000.0)].features
        np.testing.assert_array_equal(np.nonzero(a != b)[0], [18])


def test_assemble_dataset_preconditions(tmp_path):
    rng = np.random.default_rng(4)
    chunks = [(make_random_chunk(rng, n_frames=2), tmp_path / "c.bin")]
    with pytest.raises(ValueError, match="bitrates"):
        assemble_dataset(chunks, [], NOOP_STUB)
    with pytest.raises(ValueError, match="chunks"):
        assemble_dataset([], [6000.0], NOOP_STUB)


def test_assemble_dataset_annotates_failures(tmp_path):
    rng = np.random.default_rng(5)
    chunks = [(make_random_chunk(rng, n_frames=2, chunk_id="bad"), tmp_path / "c.bin")]
    with pytest.raises(TranscodeError, match="chunk='bad' preset=ultrafast"):
        assemble_dataset(chunks, [6000.0], FAIL_STUB)


def test_by_preset_grouping():
    data = generate_synthetic(n_chunks=3, seed=0)
    groups = data.by_preset()
    assert set(groups) == set(PRESETS)
    X, y, ids = groups["veryslow"]
    assert X.shape == (3, 19)
    assert y.shape == (3,)
    assert len(ids) == 3
