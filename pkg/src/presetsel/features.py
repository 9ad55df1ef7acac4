"""Feature extraction: ChunkStats + target bitrate -> fixed-order 19-vector.

The feature vector is a plain ``numpy.ndarray`` of shape (19,), float64, in
the canonical order given by :func:`feature_names`.  Indices 0-10 and 12 hold
non-negative integer counts stored as reals, index 11 the sample aspect ratio
as a single real, index 13 the mean motion-vector magnitude, indices 14-17
integer category codes, and index 18 the transcoding target bitrate in kbps
(the only feature that depends on the transcode target rather than the
incoming stream).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stats import ChunkStats

log = logging.getLogger(__name__)

FEATURE_NAMES: tuple[str, ...] = (
    "pict_type_B",
    "pict_type_P",
    "mb_I",
    "mb_P",
    "mb_B",
    "mb_S",
    "part_16x16",
    "part_16x8",
    "part_8x16",
    "part_8x8",
    "part_4x4",
    "sar",
    "mv_count",
    "mv_mean",
    "color_range_code",
    "color_space_code",
    "color_primaries_code",
    "color_transfer_code",
    "output_bitrate",
)

N_FEATURES = len(FEATURE_NAMES)

CODEBOOK_FIELDS = ("range", "space", "primaries", "transfer")


def feature_names() -> list[str]:
    """The canonical feature ordering; stable across runs."""
    return list(FEATURE_NAMES)


@dataclass(frozen=True)
class CategoricalCodebook:
    """Token -> integer code maps for the four visual metadata fields.

    Code 0 is reserved for unknown tokens and is never assigned to a known
    one; known tokens map injectively to positive codes.
    """

    range: dict[str, int] = field(default_factory=dict)
    space: dict[str, int] = field(default_factory=dict)
    primaries: dict[str, int] = field(default_factory=dict)
    transfer: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name in CODEBOOK_FIELDS:
            mapping = getattr(self, name)
            codes = list(mapping.values())
            if 0 in codes:
                raise ValueError(f"codebook field {name!r}: code 0 is reserved for unknown")
            if len(set(codes)) != len(codes):
                raise ValueError(f"codebook field {name!r}: codes must be injective")

    def encode(self, field_name: str, token: str) -> int:
        if field_name not in CODEBOOK_FIELDS:
            raise ValueError(f"unknown codebook field {field_name!r}")
        mapping = getattr(self, field_name)
        code = mapping.get(token)
        if code is None:
            log.warning("unknown %s token %r mapped to code 0", field_name, token)
            return 0
        return code


def _ordered(tokens: list[str]) -> dict[str, int]:
    return {tok: i + 1 for i, tok in enumerate(tokens)}


# Covers the common H.264 stream metadata tokens; override via load_codebook.
DEFAULT_CODEBOOK = CategoricalCodebook(
    range=_ordered(["tv", "pc", "limited", "full"]),
    space=_ordered(
        ["bt709", "bt470bg", "smpte170m", "smpte240m", "bt2020nc", "bt2020c", "fcc", "ycgco"]
    ),
    primaries=_ordered(
        ["bt709", "bt470m", "bt470bg", "smpte170m", "smpte240m", "bt2020", "film", "smpte432"]
    ),
    transfer=_ordered(
        [
            "bt709",
            "srgb",
            "smpte170m",
            "smpte240m",
            "bt2020-10",
            "bt2020-12",
            "smpte2084",
            "arib-std-b67",
            "linear",
        ]
    ),
)


def load_codebook(path: str | Path) -> CategoricalCodebook:
    """Load a codebook from text config: one ``field token code`` per line.

    Blank lines and ``#`` comments are ignored.
    """
    maps: dict[str, dict[str, int]] = {name: {} for name in CODEBOOK_FIELDS}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'field token code', got {raw!r}")
            field_name, token, code_s = parts
            if field_name not in CODEBOOK_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown field {field_name!r}")
            try:
                code = int(code_s)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: code must be an integer") from None
            maps[field_name][token] = code
    return CategoricalCodebook(**maps)


def save_codebook(codebook: CategoricalCodebook, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for field_name in CODEBOOK_FIELDS:
            for token, code in getattr(codebook, field_name).items():
                fh.write(f"{field_name} {token} {code}\n")


def encode_categorical(token: str, codebook: CategoricalCodebook, field_name: str) -> int:
    """Map a metadata token to its integer code; unknown tokens encode as 0."""
    return codebook.encode(field_name, token)


def mv_magnitude(mv: tuple[int, int]) -> int:
    """Motion-vector magnitude |x| + |y|."""
    x, y = mv
    return abs(int(x)) + abs(int(y))


def mv_chunk_sum(chunk: ChunkStats) -> int:
    """Sum of |x| + |y| over every motion vector of every frame, exactly."""
    total = 0
    for frame in chunk.frames:
        mv = frame.motion_vectors
        if mv.size:
            total += int(np.abs(mv).sum())
    return total


def mv_count(chunk: ChunkStats) -> int:
    """Total number of motion vectors in the chunk."""
    return sum(len(frame.motion_vectors) for frame in chunk.frames)


def mv_mean(chunk: ChunkStats) -> float:
    """Mean motion-vector magnitude over all vectors in the chunk.

    A chunk with no motion vectors has no motion; its mean is defined as 0.
    """
    count = mv_count(chunk)
    if count == 0:
        return 0.0
    return mv_chunk_sum(chunk) / count


def extract_features(
    chunk: ChunkStats,
    output_bitrate: float,
    codebook: CategoricalCodebook = DEFAULT_CODEBOOK,
) -> np.ndarray:
    """Build the canonical 19-feature vector for one chunk and target bitrate.

    Pure function: identical inputs give bitwise-identical vectors.  Frame
    type counts and macroblock/partition sums are chunk-local.
    """
    if output_bitrate <= 0:
        raise ValueError(f"output_bitrate must be positive, got {output_bitrate}")
    vec = np.zeros(N_FEATURES, dtype=np.float64)
    for frame in chunk.frames:
        if frame.pict_type == "B":
            vec[0] += 1
        elif frame.pict_type == "P":
            vec[1] += 1
        vec[2] += frame.mb_counts["I"]
        vec[3] += frame.mb_counts["P"]
        vec[4] += frame.mb_counts["B"]
        vec[5] += frame.mb_counts["S"]
        vec[6] += frame.partition_counts["16x16"]
        vec[7] += frame.partition_counts["16x8"]
        vec[8] += frame.partition_counts["8x16"]
        vec[9] += frame.partition_counts["8x8"]
        vec[10] += frame.partition_counts["4x4"]
    meta = chunk.meta
    vec[11] = meta.sar_num / meta.sar_den
    vec[12] = mv_count(chunk)
    vec[13] = mv_mean(chunk)
    vec[14] = codebook.encode("range", meta.color_range)
    vec[15] = codebook.encode("space", meta.color_space)
    vec[16] = codebook.encode("primaries", meta.color_primaries)
    vec[17] = codebook.encode("transfer", meta.color_transfer)
    vec[18] = float(output_bitrate)
    return vec
