"""Shared test helpers: random chunk construction and tiny trained bundles."""

from __future__ import annotations

import numpy as np
import pytest

from presetsel import (
    ChunkStats,
    ModelSpec,
    StreamMeta,
    generate_synthetic,
    make_frame,
    train_all_presets,
)

COLOR_TOKENS = {
    "range": ["tv", "pc"],
    "space": ["bt709", "bt470bg", "smpte170m"],
    "primaries": ["bt709", "bt470bg"],
    "transfer": ["bt709", "srgb"],
}


def make_random_chunk(
    rng: np.random.Generator,
    n_frames: int | None = None,
    max_mvs: int = 20,
    mv_range: int = 64,
    chunk_id: str = "test-chunk",
    allow_empty_mvs: bool = True,
) -> ChunkStats:
    if n_frames is None:
        n_frames = int(rng.integers(1, 12))
    meta = StreamMeta(
        sar_num=int(rng.integers(1, 64)),
        sar_den=int(rng.integers(1, 64)),
        color_range=str(rng.choice(COLOR_TOKENS["range"])),
        color_space=str(rng.choice(COLOR_TOKENS["space"])),
        color_primaries=str(rng.choice(COLOR_TOKENS["primaries"])),
        color_transfer=str(rng.choice(COLOR_TOKENS["transfer"])),
        fps_num=int(rng.choice([24, 25, 30, 50, 60])),
        fps_den=1,
        source_bitrate=float(rng.integers(1000, 12000)),
    )
    frames = []
    for i in range(n_frames):
        pict = "I" if i == 0 else str(rng.choice(["P", "B"]))
        lo = 0 if allow_empty_mvs else 1
        n_mv = int(rng.integers(lo, max_mvs + 1))
        mvs = [
            (int(rng.integers(-mv_range, mv_range + 1)), int(rng.integers(-mv_range, mv_range + 1)))
            for _ in range(n_mv)
        ]
        frames.append(
            make_frame(
                index=i,
                pict_type=pict,
                mb_counts={k: int(rng.integers(0, 5000)) for k in ("I", "P", "B", "S")},
                partition_counts={
                    k: int(rng.integers(0, 3000)) for k in ("16x16", "16x8", "8x16", "8x8", "4x4")
                },
                motion_vectors=mvs,
            )
        )
    return ChunkStats(meta=meta, frames=frames, chunk_id=chunk_id)


def make_zero_mv_chunk(rng: np.random.Generator, n_frames: int = 3) -> ChunkStats:
    chunk = make_random_chunk(rng, n_frames=n_frames, max_mvs=0)
    assert all(len(f.motion_vectors) == 0 for f in chunk.frames)
    return chunk


@pytest.fixture(scope="session")
def quick_bundle():
    """A complete 9-preset bundle trained fast (linear + knn candidates only)."""
    data = generate_synthetic(n_chunks=40, noise_level=0.02, seed=7)
    specs = [ModelSpec("linear", seed=7), ModelSpec("knn", seed=7)]
    return train_all_presets(data, specs=specs, k=3, seed=7)


@pytest.fixture(scope="session")
def quick_dataset():
    return generate_synthetic(n_chunks=40, noise_level=0.02, seed=7)
