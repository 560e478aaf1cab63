"""Tiled, GOP-structured video data model with rate-distortion metadata.

A segment is ``t`` tile streams of ``n`` frames each, one packet per tile
frame. Each packet carries its byte size and a propagation penalty (the
extra distortion its loss inflicts on frames that reference it). Pairwise
concealment distortion lives in a per-tile lower-triangular table.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ssim as ssim_mod


class SegmentFormatError(ValueError):
    """Malformed or invariant-violating segment file."""


class FrameType(str, enum.Enum):
    I = "I"
    P = "P"
    B = "B"


@dataclass(frozen=True)
class Packet:
    """One tile-frame packet with its rate-distortion metadata."""

    tile_index: int
    frame_index: int
    frame_type: FrameType
    size_bytes: int
    propagation_penalty: float = 0.0

    def __post_init__(self) -> None:
        if self.size_bytes <= 0:
            raise ValueError(f"packet size must be positive, got {self.size_bytes}")
        if self.propagation_penalty < 0.0 or not np.isfinite(self.propagation_penalty):
            raise ValueError("propagation penalty must be finite and non-negative")
        if self.frame_type is FrameType.B and self.propagation_penalty != 0.0:
            raise ValueError("B packets are never referenced; their penalty must be 0")
        if self.frame_index < 0:
            raise ValueError("frame index must be non-negative")


@dataclass(frozen=True)
class TileStream:
    """Ordered packets of one tile; frame indices are contiguous from 0."""

    tile_index: int
    packets: tuple[Packet, ...]
    gop_length: int

    def __post_init__(self) -> None:
        if not self.packets:
            raise ValueError("tile stream needs at least one packet")
        if self.gop_length <= 0:
            raise ValueError("gop_length must be positive")
        if self.packets[0].frame_type is not FrameType.I:
            raise ValueError(f"tile {self.tile_index}: first packet must be an I frame")
        for pos, pkt in enumerate(self.packets):
            if pkt.frame_index != pos:
                raise ValueError(
                    f"tile {self.tile_index}: frame indices must be contiguous from 0"
                )
            if pkt.tile_index != self.tile_index:
                raise ValueError("packet tile index does not match its stream")

    @property
    def frame_count(self) -> int:
        return len(self.packets)

    @property
    def total_bytes(self) -> int:
        return sum(p.size_bytes for p in self.packets)

    def sizes(self) -> np.ndarray:
        return np.array([p.size_bytes for p in self.packets], dtype=np.int64)

    def penalties(self) -> np.ndarray:
        return np.array([p.propagation_penalty for p in self.packets], dtype=np.float64)


class DistortionTable:
    """Per-tile lower-triangular concealment distortion d[i][j], 0 <= j <= i."""

    def __init__(self, tables: Sequence[np.ndarray]):
        mats = []
        for tile, raw in enumerate(tables):
            m = np.array(raw, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"tile {tile}: distortion table must be square")
            if not np.all(np.isfinite(m)) or (m < 0.0).any():
                raise ValueError(f"tile {tile}: entries must be finite and >= 0")
            if np.triu(m, k=1).any():
                raise ValueError(f"tile {tile}: entries above the diagonal must be 0")
            if np.diagonal(m).any():
                raise ValueError(f"tile {tile}: d[i][i] must be 0")
            m.flags.writeable = False
            mats.append(m)
        self._tables = tuple(mats)

    def __len__(self) -> int:
        return len(self._tables)

    def matrix(self, tile: int) -> np.ndarray:
        return self._tables[tile]

    def d(self, tile: int, i: int, j: int) -> float:
        if j > i:
            raise ValueError("distortion is defined only for j <= i")
        return float(self._tables[tile][i, j])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistortionTable):
            return NotImplemented
        return len(self) == len(other) and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self._tables, other._tables)
        )


@dataclass(frozen=True)
class VideoSegment:
    """A tiled video segment: tile streams plus their distortion tables."""

    tiles: tuple[TileStream, ...]
    distortion: DistortionTable

    def __post_init__(self) -> None:
        if not self.tiles:
            raise ValueError("segment needs at least one tile")
        n = self.tiles[0].frame_count
        for ts in self.tiles:
            if ts.frame_count != n:
                raise ValueError("all tiles must have the same number of frames")
        if len(self.distortion) != len(self.tiles):
            raise ValueError("distortion table count must match tile count")
        for ts in self.tiles:
            if self.distortion.matrix(ts.tile_index).shape[0] != n:
                raise ValueError("distortion tables must be n x n")

    @property
    def tile_count(self) -> int:
        return len(self.tiles)

    @property
    def frames_per_tile(self) -> int:
        return self.tiles[0].frame_count

    @property
    def packet_count(self) -> int:
        return self.tile_count * self.frames_per_tile

    @property
    def total_bytes(self) -> int:
        return sum(ts.total_bytes for ts in self.tiles)

    def tile(self, index: int) -> TileStream:
        return self.tiles[index]


# --------------------------------------------------------------------------
# Synthetic corpus generation
# --------------------------------------------------------------------------

DEFAULT_SIZE_RANGES: dict[FrameType, tuple[int, int]] = {
    FrameType.I: (15000, 17000),
    FrameType.P: (5500, 7500),
    FrameType.B: (3500, 5500),
}


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic segment generator.

    ``decay`` shapes the concealment model: d grows strictly with the
    concealment gap as ``amplitude * (1 - decay**gap)``. Content complexity
    is a smooth per-tile activity field with one salient hotspot
    (``activity_range`` bounds it); busier tiles hurt more when dropped,
    while packet sizes stay independent of activity.
    """

    tiles: int = 24
    frames: int = 125
    gop_length: int = 25
    gop_pattern: str | None = None
    seed: int = 0
    size_ranges: dict[FrameType, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_SIZE_RANGES)
    )
    decay: float = 0.85
    amplitude_range: tuple[float, float] = (0.48, 0.66)
    activity_range: tuple[float, float] = (0.5, 1.6)
    size_scale: float = 1.0
    propagation_scale: float = 4.0

    def pattern(self) -> str:
        if self.gop_pattern is not None:
            return self.gop_pattern
        base = "I" + "BBP" * ((self.gop_length + 2) // 3)
        return base[: self.gop_length]

    def validate(self) -> None:
        if self.tiles <= 0:
            raise ValueError(f"tile count must be positive, got {self.tiles}")
        if self.frames <= 0:
            raise ValueError(f"frame count must be positive, got {self.frames}")
        if self.gop_length > self.frames:
            raise ValueError(
                f"gop_length {self.gop_length} larger than frame count {self.frames}"
            )
        if self.gop_length <= 0:
            raise ValueError("gop_length must be positive")
        pat = self.pattern()
        if len(pat) != self.gop_length:
            raise ValueError("GOP pattern length must equal gop_length")
        if pat[0] != "I" or "I" in pat[1:]:
            raise ValueError("GOP pattern must contain exactly one I, at position 0")
        if any(c not in "IPB" for c in pat):
            raise ValueError("GOP pattern may only contain I, P, B")
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        if self.size_scale <= 0.0:
            raise ValueError("size_scale must be positive")
        if self.propagation_scale < 0.0:
            raise ValueError("propagation_scale must be non-negative")
        for ft, (lo, hi) in self.size_ranges.items():
            if lo <= 0 or hi < lo:
                raise ValueError(f"bad size range for {ft}: ({lo}, {hi})")


def frame_types_for(config: SynthConfig) -> list[FrameType]:
    """Frame type per frame index; the pattern repeats every GOP."""
    pat = config.pattern()
    return [FrameType(pat[f % config.gop_length]) for f in range(config.frames)]


def _gop_spans(n: int, gop_length: int) -> list[tuple[int, int]]:
    return [(s, min(s + gop_length, n)) for s in range(0, n, gop_length)]


def _activity_field(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Smooth per-tile content-complexity field with two salient regions.

    Tiles are laid out on the standard grid (rows of six when the count
    allows, else a single row). Activity falls off with grid distance from
    a primary hotspot (the likely gaze target) and a weaker secondary one
    placed away from it, plus mild jitter.
    """
    t = config.tiles
    cols = 6 if t % 6 == 0 else t
    rows = t // cols
    lo, hi = config.activity_range
    # Action concentrates at mid latitudes, as in real 360-degree content.
    middle = range(rows // 4, rows - rows // 4) if rows >= 2 else range(rows)
    hot_r = int(rng.choice(list(middle)))
    hot_c = int(rng.integers(cols))
    # Secondary region sits on the far side of the sphere, column-wise.
    sec_r = int(rng.integers(rows))
    sec_c = (hot_c + cols // 2 + int(rng.integers(-1, 2))) % cols
    jitter = rng.uniform(0.95, 1.05, size=t)
    field = np.empty(t, dtype=np.float64)
    for tile in range(t):
        r, c = divmod(tile, cols)
        dc = min(abs(c - hot_c), cols - abs(c - hot_c))  # columns wrap
        d1 = (r - hot_r) ** 2 + dc**2
        dc2 = min(abs(c - sec_c), cols - abs(c - sec_c))
        d2 = (r - sec_r) ** 2 + dc2**2
        # The secondary region is nearly as busy but tight: one distractor.
        bump = max(np.exp(-d1 / 3.0), 0.97 * np.exp(-d2 / 1.0))
        field[tile] = lo + (hi - lo) * bump * jitter[tile]
    return np.clip(field, lo, hi)


def synth_activity(config: SynthConfig) -> np.ndarray:
    """The per-tile activity field synth_video draws for this config."""
    config.validate()
    return _activity_field(config, np.random.default_rng(config.seed))


def synth_hotspot(config: SynthConfig) -> int:
    """Tile index of the primary salient region a viewer would gaze at."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    t = config.tiles
    cols = 6 if t % 6 == 0 else t
    rows = t // cols
    middle = range(rows // 4, rows - rows // 4) if rows >= 2 else range(rows)
    hot_r = int(rng.choice(list(middle)))
    hot_c = int(rng.integers(cols))
    return hot_r * cols + hot_c


def synth_video(config: SynthConfig) -> VideoSegment:
    """Generate a deterministic synthetic segment for the given config."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n, t = config.frames, config.tiles
    types = frame_types_for(config)
    spans = _gop_spans(n, config.gop_length)
    activity_field = _activity_field(config, rng)

    streams: list[TileStream] = []
    tables: list[np.ndarray] = []
    for tile in range(t):
        activity = activity_field[tile]
        amplitude = min(0.95, rng.uniform(*config.amplitude_range) * activity)

        # Concealment distortion is a strictly increasing function of the gap.
        gaps = np.arange(n, dtype=np.float64)
        decay_curve = amplitude * (1.0 - config.decay**gaps)
        d = np.zeros((n, n), dtype=np.float64)
        ii, jj = np.tril_indices(n, k=-1)
        d[ii, jj] = decay_curve[ii - jj]

        # Sizes are independent of activity: busy regions hurt more when
        # dropped without necessarily costing more bytes.
        size_jitter = rng.random(n)
        sizes = np.empty(n, dtype=np.int64)
        for f in range(n):
            lo, hi = config.size_ranges[types[f]]
            sizes[f] = max(1, int(round((lo + (hi - lo) * size_jitter[f]) * config.size_scale)))

        # Propagation penalty: summed concealment distortion of the frames
        # that reference the packet (rest of the GOP for I/P, none for B),
        # scaled up because decode-error propagation compounds beyond pure
        # concealment staleness.
        omega = np.zeros(n, dtype=np.float64)
        for start, end in spans:
            for f in range(start, end):
                if types[f] is FrameType.B:
                    continue
                deps = np.arange(f + 1, end)
                if deps.size:
                    omega[f] = config.propagation_scale * float(np.sum(d[deps, f]))

        packets = tuple(
            Packet(tile, f, types[f], int(sizes[f]), float(omega[f])) for f in range(n)
        )
        streams.append(TileStream(tile, packets, config.gop_length))
        tables.append(d)

    return VideoSegment(tuple(streams), DistortionTable(tables))


# --------------------------------------------------------------------------
# Segment file format
# --------------------------------------------------------------------------
#
# Line-oriented text, '#' starts a comment:
#   tiles <t> frames <n> gop <g>
#   <tile> <frame> <I|P|B> <size_bytes> <omega>          (one per packet)
#   <tile> <i> <j> <d>                                   (one per distortion entry)
# Packet records have 5 fields, distortion records 4. Missing distortion
# entries default to zero.


def save_segment(segment: VideoSegment, path) -> None:
    lines = [
        f"tiles {segment.tile_count} frames {segment.frames_per_tile} "
        f"gop {segment.tiles[0].gop_length}"
    ]
    for ts in segment.tiles:
        for p in ts.packets:
            lines.append(
                f"{p.tile_index} {p.frame_index} {p.frame_type.value} "
                f"{p.size_bytes} {p.propagation_penalty!r}"
            )
    for ts in segment.tiles:
        m = segment.distortion.matrix(ts.tile_index)
        for i in range(1, segment.frames_per_tile):
            for j in range(i):
                lines.append(f"{ts.tile_index} {i} {j} {float(m[i, j])!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def load_segment(path) -> VideoSegment:
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.readlines()
    records = [(no + 1, _strip(line)) for no, line in enumerate(raw)]
    records = [(no, line) for no, line in records if line]
    if not records:
        raise SegmentFormatError(f"{path}: empty segment file")

    no, header = records[0]
    fields = header.split()
    if len(fields) != 6 or fields[0] != "tiles" or fields[2] != "frames" or fields[4] != "gop":
        raise SegmentFormatError(f"{path}:{no}: bad header {header!r}")
    try:
        t, n, gop = int(fields[1]), int(fields[3]), int(fields[5])
    except ValueError as exc:
        raise SegmentFormatError(f"{path}:{no}: non-integer header field") from exc

    packets: dict[tuple[int, int], Packet] = {}
    tables = [np.zeros((n, n), dtype=np.float64) for _ in range(t)]
    for no, line in records[1:]:
        fields = line.split()
        if len(fields) == 5:
            try:
                tile, frame = int(fields[0]), int(fields[1])
                ftype = FrameType(fields[2])
                size, omega = int(fields[3]), float(fields[4])
            except ValueError as exc:
                raise SegmentFormatError(f"{path}:{no}: bad packet record {line!r}") from exc
            if not (0 <= tile < t and 0 <= frame < n):
                raise SegmentFormatError(f"{path}:{no}: packet indices out of range")
            if (tile, frame) in packets:
                raise SegmentFormatError(f"{path}:{no}: duplicate packet {tile}/{frame}")
            try:
                packets[tile, frame] = Packet(tile, frame, ftype, size, omega)
            except ValueError as exc:
                raise SegmentFormatError(f"{path}:{no}: {exc}") from exc
        elif len(fields) == 4:
            try:
                tile, i, j = int(fields[0]), int(fields[1]), int(fields[2])
                val = float(fields[3])
            except ValueError as exc:
                raise SegmentFormatError(f"{path}:{no}: bad distortion record {line!r}") from exc
            if not (0 <= tile < t and 0 <= i < n and 0 <= j < n):
                raise SegmentFormatError(f"{path}:{no}: distortion indices out of range")
            if j > i:
                raise SegmentFormatError(f"{path}:{no}: distortion requires j <= i")
            if i == j and val != 0.0:
                raise SegmentFormatError(f"{path}:{no}: d[i][i] must be 0, got {val}")
            tables[tile][i, j] = val
        else:
            raise SegmentFormatError(f"{path}:{no}: unrecognized record {line!r}")

    missing = [(tile, f) for tile in range(t) for f in range(n) if (tile, f) not in packets]
    if missing:
        raise SegmentFormatError(
            f"{path}: truncated segment, missing packet records (first: "
            f"tile {missing[0][0]} frame {missing[0][1]})"
        )
    streams = tuple(
        TileStream(tile, tuple(packets[tile, f] for f in range(n)), gop)
        for tile in range(t)
    )
    try:
        return VideoSegment(streams, DistortionTable(tables))
    except ValueError as exc:
        raise SegmentFormatError(f"{path}: {exc}") from exc


# --------------------------------------------------------------------------
# Distortion tables from frames
# --------------------------------------------------------------------------


def build_distortion_table(frames_per_tile: Sequence[Sequence[np.ndarray]]) -> DistortionTable:
    """Pairwise ``1 - SSIM`` tables from per-tile grayscale frame sequences."""
    tables = []
    for tile, frames in enumerate(frames_per_tile):
        frames = [np.asarray(f) for f in frames]
        if not frames:
            raise ValueError(f"tile {tile}: needs at least one frame")
        shape = frames[0].shape
        for k, f in enumerate(frames):
            if f.shape != shape:
                raise ValueError(
                    f"tile {tile}: frame {k} has shape {f.shape}, expected {shape}"
                )
        n = len(frames)
        m = np.zeros((n, n), dtype=np.float64)
        for i in range(1, n):
            for j in range(i):
                m[i, j] = ssim_mod.frame_distortion(frames[i], frames[j])
        tables.append(m)
    return DistortionTable(tables)


# --------------------------------------------------------------------------
# Portable graymap (P5) frames
# --------------------------------------------------------------------------


def read_pgm(path) -> np.ndarray:
    """Read a binary 8-bit PGM (P5) image."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit PGMs are supported")
    pos += 1  # single whitespace after maxval
    if len(data) - pos < width * height:
        raise ValueError(f"{path}: truncated PGM pixel data")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return pixels.reshape(height, width).copy()


def write_pgm(img: np.ndarray, path) -> None:
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError("PGM frames must be 2-D")
    a = np.clip(np.round(a), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
        fh.write(a.tobytes())
