"""Feature extraction: motion math, categorical codes, canonical layout."""

import numpy as np
import pytest

from presetsel import (
    CategoricalCodebook,
    DEFAULT_CODEBOOK,
    ChunkStats,
    StreamMeta,
    encode_categorical,
    extract_features,
    feature_names,
    load_codebook,
    make_frame,
    mv_chunk_sum,
    mv_magnitude,
    mv_mean,
)
from presetsel.features import save_codebook

from conftest import make_random_chunk, make_zero_mv_chunk

ZERO_COUNTS = {"I": 0, "P": 0, "B": 0, "S": 0}
ZERO_PARTS = {"16x16": 0, "16x8": 0, "8x16": 0, "8x8": 0, "4x4": 0}


def chunk_with_mvs(per_frame_mvs, pict_types=None):
    frames = []
    for i, mvs in enumerate(per_frame_mvs):
        pict = pict_types[i] if pict_types else ("I" if i == 0 else "P")
        frames.append(make_frame(i, pict, ZERO_COUNTS, ZERO_PARTS, mvs))
    meta = StreamMeta(1, 1, "tv", "bt709", "bt709", "bt709", 30, 1, 8000.0)
    return ChunkStats(meta=meta, frames=frames, chunk_id="mv")


def test_mv_magnitude():
    assert mv_magnitude((1, 2)) == 3
    assert mv_magnitude((-3, 0)) == 3
    assert mv_magnitude((0, 0)) == 0


def test_mv_chunk_sum_hand_cases():
    assert mv_chunk_sum(chunk_with_mvs([[(1, 2), (-3, 0)], [(2, -2)]])) == 10
    assert mv_chunk_sum(chunk_with_mvs([[], []])) == 0
    assert mv_chunk_sum(chunk_with_mvs([[(0, 7)]])) == 7


def test_mv_mean_hand_cases():
    assert mv_mean(chunk_with_mvs([[(1, 2), (-3, 0)], [(2, -2)]])) == pytest.approx(10 / 3)
    assert mv_mean(chunk_with_mvs([[], []])) == 0.0
    assert mv_mean(chunk_with_mvs([[(4, 4)]])) == 8.0


def test_mv_math_matches_loop_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        chunk = make_random_chunk(rng)
        total = 0
        count = 0
        for frame in chunk.frames:
            for x, y in frame.motion_vectors:
                total += abs(int(x)) + abs(int(y))
                count += 1
        assert mv_chunk_sum(chunk) == total
        expected_mean = total / count if count else 0.0
        got = mv_mean(chunk)
        if count:
            assert got == pytest.approx(expected_mean, rel=1e-9)
        else:
            assert got == 0.0


def test_mv_mean_times_count_equals_sum():
    rng = np.random.default_rng(12)
    for _ in range(50):
        chunk = make_random_chunk(rng, allow_empty_mvs=False)
        count = sum(len(f.motion_vectors) for f in chunk.frames)
        assert mv_mean(chunk) * count == pytest.approx(mv_chunk_sum(chunk), rel=1e-9)


def test_mv_order_permutation_invariant():
    rng = np.random.default_rng(13)
    chunk = make_random_chunk(rng, n_frames=4, allow_empty_mvs=False)
    permuted_frames = [
        make_frame(
            f.index,
            f.pict_type,
            f.mb_counts,
            f.partition_counts,
            [tuple(mv) for mv in f.motion_vectors[::-1]],
        )
        for f in chunk.frames
    ]
    permuted = ChunkStats(meta=chunk.meta, frames=permuted_frames, chunk_id=chunk.chunk_id)
    assert mv_chunk_sum(permuted) == mv_chunk_sum(chunk)
    assert mv_mean(permuted) == mv_mean(chunk)


def test_mv_scaling_scales_exactly():
    rng = np.random.default_rng(14)
    chunk = make_random_chunk(rng, n_frames=3, allow_empty_mvs=False)
    for c in (0, 2, 7):
        scaled_frames = [
            make_frame(
                f.index,
                f.pict_type,
                f.mb_counts,
                f.partition_counts,
                [(int(x) * c, int(y) * c) for x, y in f.motion_vectors],
            )
            for f in chunk.frames
        ]
        scaled = ChunkStats(meta=chunk.meta, frames=scaled_frames, chunk_id=chunk.chunk_id)
        assert mv_chunk_sum(scaled) == c * mv_chunk_sum(chunk)
        assert mv_mean(scaled) == pytest.approx(c * mv_mean(chunk), rel=1e-12)


def test_encode_categorical():
    first_space_token = next(iter(DEFAULT_CODEBOOK.space))
    assert encode_categorical(first_space_token, DEFAULT_CODEBOOK, "space") == 1
    assert encode_categorical("zzz", DEFAULT_CODEBOOK, "space") == 0
    assert encode_categorical("bt709", DEFAULT_CODEBOOK, "space") == encode_categorical(
        "bt709", DEFAULT_CODEBOOK, "space"
    )


def test_unknown_token_logs_warning(caplog):
    with caplog.at_level("WARNING", logger="presetsel.features"):
        assert encode_categorical("zzz", DEFAULT_CODEBOOK, "range") == 0
    assert any("zzz" in rec.message for rec in caplog.records)


def test_codebook_rejects_reserved_zero_and_duplicates():
    with pytest.raises(ValueError, match="reserved"):
        CategoricalCodebook(range={"tv": 0})
    with pytest.raises(ValueError, match="injective"):
        CategoricalCodebook(space={"a": 1, "b": 1})


def test_codebook_file_roundtrip(tmp_path):
    path = tmp_path / "codes.conf"
    save_codebook(DEFAULT_CODEBOOK, path)
    loaded = load_codebook(path)
    assert loaded == DEFAULT_CODEBOOK


def test_extract_features_hand_case():
    # 2 frames (1 I, 1 P); the P frame carries 3 MVs of (1, 1)
    chunk = chunk_with_mvs([[], [(1, 1), (1, 1), (1, 1)]], pict_types=["I", "P"])
    vec = extract_features(chunk, 6000.0)
    assert vec[0] == 0  # no B frames
    assert vec[1] == 1  # one P frame
    assert vec[12] == 3
    assert vec[13] == 2.0
    assert vec[18] == 6000.0


def test_extract_features_all_zero_chunk():
    meta = StreamMeta(1, 1, "nosuch", "nosuch", "nosuch", "nosuch", 30, 1, 8000.0)
    frames = [make_frame(0, "I", ZERO_COUNTS, ZERO_PARTS, [])]
    chunk = ChunkStats(meta=meta, frames=frames, chunk_id="z")
    vec = extract_features(chunk, 6000.0)
    expected = np.zeros(19)
    expected[11] = 1.0
    expected[18] = 6000.0
    np.testing.assert_array_equal(vec, expected)


def test_bitrate_is_sole_target_dependent_feature():
    rng = np.random.default_rng(5)
    chunk = make_random_chunk(rng, n_frames=6)
    a = extract_features(chunk, 6000.0)
    b = extract_features(chunk, 4000.0)
    diff = np.nonzero(a != b)[0]
    np.testing.assert_array_equal(diff, [18])


def test_extract_features_sums_counts():
    rng = np.random.default_rng(6)
    chunk = make_random_chunk(rng, n_frames=8)
    vec = extract_features(chunk, 5000.0)
    assert vec[0] == sum(1 for f in chunk.frames if f.pict_type == "B")
    assert vec[1] == sum(1 for f in chunk.frames if f.pict_type == "P")
    assert vec[2] == sum(f.mb_counts["I"] for f in chunk.frames)
    assert vec[5] == sum(f.mb_counts["S"] for f in chunk.frames)
    assert vec[6] == sum(f.partition_counts["16x16"] for f in chunk.frames)
    assert vec[10] == sum(f.partition_counts["4x4"] for f in chunk.frames)
    assert vec[11] == chunk.meta.sar_num / chunk.meta.sar_den


def test_extract_features_pure():
    rng = np.random.default_rng(7)
    chunk = make_random_chunk(rng, n_frames=5)
    a = extract_features(chunk, 5500.0)
    b = extract_features(chunk, 5500.0)
    assert a.tobytes() == b.tobytes()


def test_extract_rejects_nonpositive_bitrate():
    rng = np.random.default_rng(8)
    chunk = make_random_chunk(rng, n_frames=2)
    with pytest.raises(ValueError, match="output_bitrate"):
        extract_features(chunk, 0.0)
    with pytest.raises(ValueError, match="output_bitrate"):
        extract_features(chunk, -5.0)


def test_feature_names_canonical():
    names = feature_names()
    assert len(names) == 19
    assert names[13] == "mv_mean"
    assert names[18] == "output_bitrate"
    assert names == feature_names()  # stable


def test_zero_mv_chunk_mean_zero():
    rng = np.random.default_rng(21)
    chunk = make_zero_mv_chunk(rng)
    vec = extract_features(chunk, 3000.0)
    assert vec[12] == 0.0
    assert vec[13] == 0.0
