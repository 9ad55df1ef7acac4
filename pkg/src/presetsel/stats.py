"""Chunk statistics file parsing and validation.

A chunk stats file is line-oriented UTF-8 text with LF line endings: one
``meta`` header record followed by one ``frame`` record per frame.  It carries
the per-frame coding metadata (frame types, macroblock and partition counts,
motion vectors) plus stream-level metadata that downstream feature extraction
consumes.  Grammar:

    meta sar=<num>/<den> range=<tok> space=<tok> primaries=<tok> \
transfer=<tok> fps=<num>/<den> bitrate=<kbps>
    frame <index> type=<I|P|B> mb=I:<n>,P:<n>,B:<n>,S:<n> \
part=16x16:<n>,16x8:<n>,8x16:<n>,8x8:<n>,4x4:<n> mv=<x1>:<y1>;<x2>:<y2>;...

Tokens are lowercase ASCII, counts are base-10 non-negative integers, motion
vector components are base-10 signed integers in the stream's native integer
units (no rescaling is applied).  The ``mv=`` list may be empty.  Frame
indices must be 0..N-1 contiguous.  Intra frames with motion vectors are
accepted: some encoders emit intra MV side data, and the motion math
downstream is agnostic to frame type.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

PICT_TYPES = ("I", "P", "B")
MB_KEYS = ("I", "P", "B", "S")
PARTITION_KEYS = ("16x16", "16x8", "8x16", "8x8", "4x4")


class StatsParseError(ValueError):
    """Malformed chunk stats input; carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class StreamMeta:
    """Stream-level metadata carried in the stats file header."""

    sar_num: int
    sar_den: int
    color_range: str
    color_space: str
    color_primaries: str
    color_transfer: str
    fps_num: int
    fps_den: int
    source_bitrate: float  # kbps

    @property
    def frame_rate(self) -> float:
        return self.fps_num / self.fps_den

    @property
    def sar(self) -> float:
        return self.sar_num / self.sar_den


@dataclass(frozen=True, eq=False)
class FrameStats:
    """Per-frame coding statistics.

    ``motion_vectors`` is an (m, 2) int64 array of (mv_x, mv_y) pairs in the
    source stream's native integer units; it may be empty for any frame type.
    """

    index: int
    pict_type: str
    mb_counts: dict[str, int]
    partition_counts: dict[str, int]
    motion_vectors: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameStats):
            return NotImplemented
        return (
            self.index == other.index
            and self.pict_type == other.pict_type
            and self.mb_counts == other.mb_counts
            and self.partition_counts == other.partition_counts
            and np.array_equal(self.motion_vectors, other.motion_vectors)
        )


@dataclass(frozen=True)
class ChunkStats:
    """A parsed chunk: stream metadata plus the ordered per-frame records."""

    meta: StreamMeta
    frames: list[FrameStats]
    chunk_id: str = ""

    @property
    def n_frames(self) -> int:
        return len(self.frames)


def _empty_mv() -> np.ndarray:
    arr = np.empty((0, 2), dtype=np.int64)
    arr.flags.writeable = False
    return arr


def make_frame(
    index: int,
    pict_type: str,
    mb_counts: dict[str, int],
    partition_counts: dict[str, int],
    motion_vectors: Iterable[tuple[int, int]] = (),
) -> FrameStats:
    """Construct a FrameStats, normalizing the MV list to a read-only array."""
    mv = np.asarray(list(motion_vectors), dtype=np.int64)
    if mv.size == 0:
        mv = _empty_mv()
    else:
        mv = mv.reshape(-1, 2).copy()
        mv.flags.writeable = False
    return FrameStats(
        index=index,
        pict_type=pict_type,
        mb_counts=dict(mb_counts),
        partition_counts=dict(partition_counts),
        motion_vectors=mv,
    )


def _parse_nonneg_int(text: str, line: int, what: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise StatsParseError(line, f"{what}: expected an integer, got {text!r}") from None
    if value < 0:
        raise StatsParseError(line, f"{what}: negative count {value}")
    return value


def _parse_kv(token: str, key: str, line: int) -> str:
    prefix = key + "="
    if not token.startswith(prefix):
        raise StatsParseError(line, f"expected {key}=<value>, got {token!r}")
    return token[len(prefix):]


def _parse_ratio(text: str, line: int, what: str) -> tuple[int, int]:
    num_s, sep, den_s = text.partition("/")
    if not sep:
        raise StatsParseError(line, f"{what}: expected <num>/<den>, got {text!r}")
    try:
        num, den = int(num_s), int(den_s)
    except ValueError:
        raise StatsParseError(line, f"{what}: expected <num>/<den>, got {text!r}") from None
    if num <= 0 or den <= 0:
        raise StatsParseError(line, f"{what}: components must be positive, got {text!r}")
    return num, den


def _parse_meta_line(text: str, line: int) -> StreamMeta:
    tokens = text.split()
    if not tokens or tokens[0] != "meta":
        raise StatsParseError(line, "malformed header record: expected a 'meta' line")
    if len(tokens) != 8:
        raise StatsParseError(
            line, f"malformed header record: expected 7 fields, got {len(tokens) - 1}"
        )
    sar_num, sar_den = _parse_ratio(_parse_kv(tokens[1], "sar", line), line, "sar")
    color_range = _parse_kv(tokens[2], "range", line)
    color_space = _parse_kv(tokens[3], "space", line)
    color_primaries = _parse_kv(tokens[4], "primaries", line)
    color_transfer = _parse_kv(tokens[5], "transfer", line)
    fps_num, fps_den = _parse_ratio(_parse_kv(tokens[6], "fps", line), line, "fps")
    bitrate_s = _parse_kv(tokens[7], "bitrate", line)
    try:
        bitrate = float(bitrate_s)
    except ValueError:
        raise StatsParseError(line, f"bitrate: expected a number, got {bitrate_s!r}") from None
    if bitrate <= 0:
        raise StatsParseError(line, f"bitrate: must be positive, got {bitrate_s}")
    return StreamMeta(
        sar_num=sar_num,
        sar_den=sar_den,
        color_range=color_range,
        color_space=color_space,
        color_primaries=color_primaries,
        color_transfer=color_transfer,
        fps_num=fps_num,
        fps_den=fps_den,
        source_bitrate=bitrate,
    )


def _parse_count_map(text: str, keys: tuple[str, ...], line: int, what: str) -> dict[str, int]:
    parts = text.split(",") if text else []
    if len(parts) != len(keys):
        raise StatsParseError(line, f"{what}: expected {len(keys)} entries, got {len(parts)}")
    out: dict[str, int] = {}
    for part, key in zip(parts, keys):
        name, sep, value = part.partition(":")
        if not sep or name != key:
            raise StatsParseError(line, f"{what}: expected entry {key}:<n>, got {part!r}")
        out[key] = _parse_nonneg_int(value, line, f"{what} {key}")
    return out


def _parse_mv_list(text: str, line: int) -> np.ndarray:
    if text == "":
        return _empty_mv()
    pairs = []
    for item in text.split(";"):
        x_s, sep, y_s = item.partition(":")
        if not sep:
            raise StatsParseError(line, f"mv: expected <x>:<y>, got {item!r}")
        try:
            pairs.append((int(x_s), int(y_s)))
        except ValueError:
            raise StatsParseError(line, f"mv: expected integers, got {item!r}") from None
    mv = np.asarray(pairs, dtype=np.int64)
    mv.flags.writeable = False
    return mv


def _parse_frame_line(text: str, line: int) -> FrameStats:
    tokens = text.split()
    if len(tokens) != 6 or tokens[0] != "frame":
        raise StatsParseError(line, "malformed frame record")
    try:
        index = int(tokens[1])
    except ValueError:
        raise StatsParseError(line, f"frame index: expected an integer, got {tokens[1]!r}") from None
    if index < 0:
        raise StatsParseError(line, f"frame index: negative index {index}")
    pict_type = _parse_kv(tokens[2], "type", line)
    if pict_type not in PICT_TYPES:
        raise StatsParseError(line, f"unknown pict_type token {pict_type!r}")
    mb_counts = _parse_count_map(_parse_kv(tokens[3], "mb", line), MB_KEYS, line, "mb")
    partition_counts = _parse_count_map(
        _parse_kv(tokens[4], "part", line), PARTITION_KEYS, line, "part"
    )
    motion_vectors = _parse_mv_list(_parse_kv(tokens[5], "mv", line), line)
    return FrameStats(
        index=index,
        pict_type=pict_type,
        mb_counts=mb_counts,
        partition_counts=partition_counts,
        motion_vectors=motion_vectors,
    )


PathOrStream = Union[str, Path, IO[bytes], IO[str]]


def parse_chunk_stats(source: PathOrStream, chunk_id: str | None = None) -> ChunkStats:
    """Parse a chunk stats file or byte/text stream into a ChunkStats.

    Field values round-trip bit-exactly through :func:`write_chunk_stats` and
    frame order is preserved.  ``chunk_id`` defaults to the file's stem when a
    path is given, otherwise "".  Raises :class:`StatsParseError` with the
    offending line number on malformed input.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if chunk_id is None:
            chunk_id = path.stem
        with open(path, "rb") as fh:
            return _parse_lines(fh.read().decode("utf-8"), chunk_id)
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    return _parse_lines(raw, chunk_id or "")


def _parse_lines(text: str, chunk_id: str) -> ChunkStats:
    lines = text.splitlines()
    # skip trailing blank lines but reject interior ones below
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise StatsParseError(1, "empty input: missing 'meta' header")
    meta = _parse_meta_line(lines[0], 1)
    frames: list[FrameStats] = []
    for offset, line_text in enumerate(lines[1:], start=2):
        if not line_text.strip():
            raise StatsParseError(offset, "blank line inside frame records")
        frame = _parse_frame_line(line_text, offset)
        if frame.index != len(frames):
            raise StatsParseError(
                offset,
                f"non-contiguous frame index: got {frame.index}, expected {len(frames)}",
            )
        frames.append(frame)
    if not frames:
        raise StatsParseError(2, "chunk has no frame records")
    return ChunkStats(meta=meta, frames=frames, chunk_id=chunk_id)


def _fmt_float(x: float) -> str:
    # repr round-trips doubles exactly and stays compact
    return repr(float(x))


def write_chunk_stats(chunk: ChunkStats, dest: PathOrStream) -> None:
    """Serialize a ChunkStats to the chunk stats text format."""
    m = chunk.meta
    out = io.StringIO()
    out.write(
        f"meta sar={m.sar_num}/{m.sar_den} range={m.color_range} space={m.color_space} "
        f"primaries={m.color_primaries} transfer={m.color_transfer} "
        f"fps={m.fps_num}/{m.fps_den} bitrate={_fmt_float(m.source_bitrate)}\n"
    )
    for frame in chunk.frames:
        mb = ",".join(f"{k}:{frame.mb_counts[k]}" for k in MB_KEYS)
        part = ",".join(f"{k}:{frame.partition_counts[k]}" for k in PARTITION_KEYS)
        mv = ";".join(f"{int(x)}:{int(y)}" for x, y in frame.motion_vectors)
        out.write(f"frame {frame.index} type={frame.pict_type} mb={mb} part={part} mv={mv}\n")
    payload = out.getvalue()
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    else:
        try:
            dest.write(payload)
        except TypeError:
            dest.write(payload.encode("utf-8"))


def validate_chunk(chunk: ChunkStats, expected_frames: int = 120) -> list[str]:
    """Check a chunk against its type invariants and an expected frame count.

    Returns one finding string per violation; an empty list means the chunk is
    valid.  Findings never raise: this is for data QA, not parsing.
    """
    findings: list[str] = []
    m = chunk.meta
    if m.sar_num <= 0 or m.sar_den <= 0:
        findings.append(f"meta: non-positive sample aspect ratio {m.sar_num}/{m.sar_den}")
    if m.fps_num <= 0 or m.fps_den <= 0:
        findings.append(f"meta: non-positive frame rate {m.fps_num}/{m.fps_den}")
    if m.source_bitrate <= 0:
        findings.append(f"meta: non-positive source bitrate {m.source_bitrate}")
    if not chunk.frames:
        findings.append("chunk has no frames")
        return findings
    if len(chunk.frames) != expected_frames:
        findings.append(
            f"frame count mismatch: got {len(chunk.frames)}, expected {expected_frames}"
        )
    for pos, frame in enumerate(chunk.frames):
        where = f"frame {pos}"
        if frame.index != pos:
            findings.append(f"{where}: non-contiguous index {frame.index}")
        if frame.pict_type not in PICT_TYPES:
            findings.append(f"{where}: unknown pict_type {frame.pict_type!r}")
        for key in MB_KEYS:
            if frame.mb_counts.get(key, 0) < 0:
                findings.append(f"{where}: negative mb count {key}={frame.mb_counts[key]}")
        for key in PARTITION_KEYS:
            if frame.partition_counts.get(key, 0) < 0:
                findings.append(
                    f"{where}: negative partition count {key}={frame.partition_counts[key]}"
                )
    return findings
