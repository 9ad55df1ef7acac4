"""x264 preset ordering and per-preset encoder option reference data.

Presets are ordered by "slowness": ultrafast (ordinal 0) transcodes fastest
with the lowest rate-distortion quality, veryslow (ordinal 8) is the slowest
and highest quality.  The placebo preset is intentionally excluded.
"""

from __future__ import annotations

PRESETS: tuple[str, ...] = (
    "ultrafast",
    "superfast",
    "veryfast",
    "faster",
    "fast",
    "medium",
    "slow",
    "slower",
    "veryslow",
)

N_PRESETS = len(PRESETS)

_ORDINALS = {name: i for i, name in enumerate(PRESETS)}


def ordinal(preset: str) -> int:
    """Return the slowness ordinal of a preset (0 = ultrafast, 8 = veryslow)."""
    try:
        return _ORDINALS[preset]
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}") from None


def is_preset(token: str) -> bool:
    return token in _ORDINALS


OPTION_NAMES: tuple[str, ...] = (
    "aq_mode",
    "b_adapt",
    "bframes",
    "deblock",
    "direct",
    "me",
    "merange",
    "cabac",
    "partitions",
    "rc_lookahead",
    "ref",
    "scenecut",
    "subme",
    "trellis",
    "weightp",
)

# Read-only reference table: the 15 encoder option values per preset.
# Option ordering follows OPTION_NAMES; preset ordering follows PRESETS.
_OPTION_ROWS: dict[str, tuple] = {
    "aq_mode":      (0, 1, 1, 1, 1, 1, 1, 1, 1),
    "b_adapt":      (0, 1, 1, 1, 1, 1, 2, 2, 2),
    "bframes":      (0, 3, 3, 3, 3, 3, 3, 3, 8),
    "deblock":      ("0:0:0", "1:0:0", "1:0:0", "1:0:0", "1:0:0",
                     "1:0:0", "1:0:0", "1:0:0", "1:0:0"),
    "direct":       ("spatial", "spatial", "spatial", "spatial", "spatial",
                     "spatial", "auto", "auto", "auto"),
    "me":           ("dia", "dia", "hex", "hex", "hex", "hex",
                     "umh", "umh", "umh"),
    "merange":      (16, 16, 16, 16, 16, 16, 16, 16, 24),
    "cabac":        (0, 1, 1, 1, 1, 1, 1, 1, 1),
    "partitions":   ("none",
                     "i8x8,i4x4",
                     "p8x8,b8x8,i8x8,i4x4",
                     "p8x8,b8x8,i8x8,i4x4",
                     "p8x8,b8x8,i8x8,i4x4",
                     "p8x8,b8x8,i8x8,i4x4",
                     "all", "all", "all"),
    "rc_lookahead": (0, 0, 10, 20, 30, 40, 50, 60, 60),
    "ref":          (1, 1, 1, 2, 2, 3, 5, 8, 16),
    "scenecut":     (0, 40, 40, 40, 40, 40, 40, 40, 40),
    "subme":        (0, 1, 2, 4, 6, 7, 8, 9, 10),
    "trellis":      (0, 0, 0, 1, 1, 1, 1, 2, 2),
    "weightp":      (0, 1, 1, 1, 1, 2, 2, 2, 2),
}

PRESET_OPTIONS: dict[str, dict[str, object]] = {
    preset: {opt: _OPTION_ROWS[opt][i] for opt in OPTION_NAMES}
    for i, preset in enumerate(PRESETS)
}


def preset_options(preset: str) -> dict[str, object]:
    """Return the encoder option table row for one preset."""
    ordinal(preset)  # validates the name
    return dict(PRESET_OPTIONS[preset])
