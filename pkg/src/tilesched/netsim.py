"""Discrete-time simulation of a congested network node with a finite queue.

Packets of a tiled segment arrive window by window (one GOP per window by
default), the queue drains at the bandwidth-trace rate, and when occupancy
exceeds a threshold fraction of the buffer the selected scheduling strategy
decides which queued packets to drop. A session produces the five
evaluation metrics: total and viewport distortion (scaled 0-100 against the
keep-only-anchors session), total and viewport packet loss, and viewport
bandwidth consumption.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from dataclasses import field as dataclasses_field
from typing import Callable, Sequence

import numpy as np

from . import baselines
from .media import Packet, VideoSegment
from .predictor import GroundTruthPredictor, Trajectory
from .scheduler import (
    DEFAULT_QUANTUM_BYTES,
    Schedule,
    allocate_budget,
    per_tile_rd_curve,
)
from .viewport import (
    TileGrid,
    TileWeights,
    ViewportSpec,
    Viewpoint,
    classify_tiles,
    weights_for_prediction,
)

STRATEGIES = ("baseline", "ipb", "nirap", "ewrd", "twrd")


class TraceFormatError(ValueError):
    """Malformed bandwidth trace file."""


# --------------------------------------------------------------------------
# Bandwidth traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BandwidthTrace:
    """Piecewise-constant throughput samples; the last one holds to end_ms."""

    times_ms: tuple[int, ...]
    bps: tuple[float, ...]
    end_ms: int

    def __post_init__(self) -> None:
        if not self.times_ms:
            raise ValueError("empty trace")
        if len(self.times_ms) != len(self.bps):
            raise ValueError("times and throughputs must have equal length")
        for a, b in zip(self.times_ms, self.times_ms[1:]):
            if b <= a:
                raise ValueError("trace timestamps must be strictly increasing")
        for v in self.bps:
            if v < 0.0 or not np.isfinite(v):
                raise ValueError(f"throughput must be finite and >= 0, got {v}")
        if self.end_ms <= self.times_ms[-1] and len(self.times_ms) > 1:
            raise ValueError("trace end must lie beyond the last sample")

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.times_ms[0]

    def bytes_between(self, t0_ms: float, t1_ms: float) -> float:
        """Drainable bytes in [t0, t1); errors if the trace does not cover it."""
        if t0_ms < self.times_ms[0] or t1_ms > self.end_ms:
            raise ValueError(
                f"trace covers [{self.times_ms[0]}, {self.end_ms}] ms, "
                f"requested [{t0_ms}, {t1_ms}] ms"
            )
        total = 0.0
        bounds = list(self.times_ms) + [self.end_ms]
        for i, rate in enumerate(self.bps):
            lo, hi = bounds[i], bounds[i + 1]
            overlap = min(hi, t1_ms) - max(lo, t0_ms)
            if overlap > 0:
                total += rate * overlap / 8000.0
        return total


def constant_trace(mbps: float, duration_seconds: float) -> BandwidthTrace:
    """Flat trace sampled once per second."""
    if mbps <= 0.0:
        raise ValueError(f"throughput must be positive, got {mbps} Mbps")
    if duration_seconds <= 0.0:
        raise ValueError("trace duration must be positive")
    end_ms = int(round(duration_seconds * 1000.0))
    times = tuple(range(0, end_ms, 1000))
    return BandwidthTrace(times, tuple(mbps * 1e6 for _ in times), end_ms)


def load_lte_trace(path) -> BandwidthTrace:
    """Read a `time_ms throughput_bps` trace file ('#' comments allowed)."""
    times: list[int] = []
    bps: list[float] = []
    with open(path, "r", encoding="ascii") as fh:
        for no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            fields = body.split()
            if len(fields) != 2:
                raise TraceFormatError(
                    f"{path}:{no}: expected 'time_ms throughput_bps', got {body!r}"
                )
            try:
                t, v = int(fields[0]), float(fields[1])
            except ValueError as exc:
                raise TraceFormatError(f"{path}:{no}: non-numeric field") from exc
            if v < 0.0:
                raise TraceFormatError(f"{path}:{no}: negative throughput {v}")
            if times and t <= times[-1]:
                raise TraceFormatError(f"{path}:{no}: timestamps must increase")
            times.append(t)
            bps.append(v)
    if not times:
        raise TraceFormatError(f"{path}: empty trace file")
    interval = times[-1] - times[-2] if len(times) > 1 else 1000
    return BandwidthTrace(tuple(times), tuple(bps), times[-1] + interval)


def save_trace(trace: BandwidthTrace, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for t, v in zip(trace.times_ms, trace.bps):
            fh.write(f"{t} {v!r}\n")


# --------------------------------------------------------------------------
# Session configuration and report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SessionConfig:
    fps: float = 25.0
    window_frames: int | None = None  # defaults to the segment's GOP length
    capacity_bytes: int | None = None  # defaults to 2x the largest arrival window
    threshold: float = 0.7
    quantum_bytes: int = DEFAULT_QUANTUM_BYTES
    blank_distortion: float = 1.0
    horizon_seconds: float | None = None  # defaults to one window
    viewport_min_class: int = 2
    viewport_loss_denominator: str = "total"  # or "viewport"
    grid: TileGrid = TileGrid()
    viewport: ViewportSpec = ViewportSpec()
    overlap_samples: int = 64

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")
        if self.viewport_loss_denominator not in ("total", "viewport"):
            raise ValueError("loss denominator must be 'total' or 'viewport'")

    def to_dict(self) -> dict:
        return {
            "fps": self.fps,
            "window_frames": self.window_frames,
            "capacity_bytes": self.capacity_bytes,
            "threshold": self.threshold,
            "quantum_bytes": self.quantum_bytes,
            "blank_distortion": self.blank_distortion,
            "horizon_seconds": self.horizon_seconds,
            "viewport_min_class": self.viewport_min_class,
            "viewport_loss_denominator": self.viewport_loss_denominator,
            "grid": [self.grid.rows, self.grid.cols],
            "viewport_fov": [self.viewport.h_fov_deg, self.viewport.v_fov_deg],
            "overlap_samples": self.overlap_samples,
        }


@dataclass
class QueueNode:
    """The congested node's finite FIFO buffer.

    Scheduling fires exactly when queued bytes exceed
    ``threshold * capacity``; packets that would overflow the buffer are
    tail-dropped at entry.
    """

    capacity_bytes: int
    threshold: float = 0.7
    packets: list[Packet] = dataclasses_field(default_factory=list)
    bytes_queued: int = 0

    def offer(self, packet: Packet) -> bool:
        if self.bytes_queued + packet.size_bytes > self.capacity_bytes:
            return False
        self.packets.append(packet)
        self.bytes_queued += packet.size_bytes
        return True

    def over_threshold(self) -> bool:
        return self.bytes_queued > self.threshold * self.capacity_bytes

    def drain_all(self) -> list[Packet]:
        out, self.packets = self.packets, []
        self.bytes_queued = 0
        return out

    def pop_front_within(self, budget_bytes: int) -> list[Packet]:
        """FIFO transmission: whole packets while the budget allows."""
        out: list[Packet] = []
        used = 0
        while self.packets and used + self.packets[0].size_bytes <= budget_bytes:
            p = self.packets.pop(0)
            used += p.size_bytes
            self.bytes_queued -= p.size_bytes
            out.append(p)
        return out


@dataclass(frozen=True)
class WindowRecord:
    index: int
    start_ms: int
    end_ms: int
    budget_bytes: int
    arrived: int
    transmitted: int
    dropped: int
    transmitted_bytes: int
    scheduler_invoked: bool
    queue_bytes_before: int
    queue_bytes_after: int
    viewport_tiles: tuple[int, ...]


METRIC_FIELDS = (
    "total_distortion",
    "viewport_distortion",
    "total_packet_loss_pct",
    "viewport_packet_loss_pct",
    "viewport_bandwidth_consumption_pct",
)


@dataclass(frozen=True)
class MetricsReport:
    """The five session metrics plus raw values and per-window breakdowns."""

    strategy: str
    total_distortion: float
    viewport_distortion: float
    total_packet_loss_pct: float
    viewport_packet_loss_pct: float
    viewport_bandwidth_consumption_pct: float
    raw_total_distortion: float
    raw_viewport_distortion: float
    normalization_base: float
    viewport_normalization_base: float
    offered_packets: int
    transmitted_packets: int
    dropped_packets: int
    dropped_viewport_packets: int
    transmitted_bytes: int
    viewport_transmitted_bytes: int
    viewport_tiles: tuple[int, ...]
    kept_per_tile: tuple[tuple[int, ...], ...]
    windows: tuple[WindowRecord, ...]
    config: dict

    def metrics(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}

    def to_dict(self) -> dict:
        d = {
            "strategy": self.strategy,
            **self.metrics(),
            "raw_total_distortion": self.raw_total_distortion,
            "raw_viewport_distortion": self.raw_viewport_distortion,
            "normalization_base": self.normalization_base,
            "viewport_normalization_base": self.viewport_normalization_base,
            "offered_packets": self.offered_packets,
            "transmitted_packets": self.transmitted_packets,
            "dropped_packets": self.dropped_packets,
            "dropped_viewport_packets": self.dropped_viewport_packets,
            "transmitted_bytes": self.transmitted_bytes,
            "viewport_transmitted_bytes": self.viewport_transmitted_bytes,
            "viewport_tiles": list(self.viewport_tiles),
            "config": self.config,
            "windows": [vars(w) | {"viewport_tiles": list(w.viewport_tiles)} for w in self.windows],
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# Distortion evaluation that tolerates missing anchors
# --------------------------------------------------------------------------


def tile_distortion_with_anchor_loss(
    d: np.ndarray, omega: np.ndarray, kept: Sequence[int], blank_distortion: float
) -> float:
    """Tile distortion where frames with no kept predecessor cost ``blank``.

    Matches the engine exactly whenever frame 0 is kept; heuristics under
    scarcity may drop the anchor, in which case leading dropped frames have
    nothing to conceal with and are charged the blank-frame distortion.
    """
    n = d.shape[0]
    marks = np.full(n, -1, dtype=np.int64)
    ks = sorted(set(int(k) for k in kept))
    if ks and (ks[0] < 0 or ks[-1] >= n):
        raise ValueError("kept indices out of range")
    marks[ks] = ks
    refs = np.maximum.accumulate(marks)
    keep = np.zeros(n, dtype=bool)
    keep[ks] = True
    total = 0.0
    for i in range(n):
        if keep[i]:
            continue
        if refs[i] < 0:
            total += blank_distortion + omega[i]
        else:
            total += d[i, refs[i]] + omega[i]
    return float(total)


def _segment_distortion(
    segment: VideoSegment,
    kept_per_tile: Sequence[Sequence[int]],
    blank: float,
    tiles: Sequence[int] | None = None,
) -> float:
    picks = range(segment.tile_count) if tiles is None else tiles
    total = 0.0
    for tile in picks:
        d = segment.distortion.matrix(tile)
        omega = segment.tile(tile).penalties()
        total += tile_distortion_with_anchor_loss(d, omega, kept_per_tile[tile], blank)
    return total


# --------------------------------------------------------------------------
# Window scheduling
# --------------------------------------------------------------------------


def _interleave_order(tiles: int) -> list[int]:
    """Stride-interleaved tile order for each frame's packet burst.

    Tiled muxers interleave spatially adjacent tiles so a contiguous loss
    burst never wipes out one screen region; any prefix or suffix of the
    arrival order is spread across the grid.
    """
    stride = max(1, round(tiles / 3.5))
    while math.gcd(stride, tiles) != 1:
        stride += 1
    return [(k * stride) % tiles for k in range(tiles)]


def _rd_window_schedule(
    segment: VideoSegment,
    queued: Sequence[Packet],
    weights: TileWeights,
    budget: int,
    quantum: int,
    blank: float,
) -> tuple[list[Packet], list[Packet]]:
    """Run the weighted scheduler over the queued packets of one window."""
    by_tile: dict[int, list[Packet]] = {}
    for p in queued:
        by_tile.setdefault(p.tile_index, []).append(p)
    tile_frames: dict[int, range] = {}
    for tile, pkts in by_tile.items():
        frames = sorted(p.frame_index for p in pkts)
        if frames != list(range(frames[0], frames[-1] + 1)):
            raise RuntimeError(f"tile {tile}: queued frames are not contiguous")
        tile_frames[tile] = range(frames[0], frames[-1] + 1)

    tiles = sorted(by_tile)
    anchors = {t: by_tile[t][0] for t in tiles}
    anchor_bytes = sum(a.size_bytes for a in anchors.values())

    kept_frames: dict[int, tuple[int, ...]]
    if anchor_bytes > budget:
        kept_frames = _anchor_fallback(segment, by_tile, weights, budget, blank)
    else:
        curves = [
            per_tile_rd_curve(
                segment,
                tile,
                weights.weights[tile],
                max_rate=budget,
                frames=tile_frames[tile],
            )
            for tile in tiles
        ]
        picks = allocate_budget(curves, budget, quantum)
        kept_frames = {p.tile_index: p.kept for p in picks}

    kept, dropped = [], []
    for p in queued:
        if p.frame_index in kept_frames.get(p.tile_index, ()):
            kept.append(p)
        else:
            dropped.append(p)
    return kept, dropped


def _anchor_fallback(
    segment: VideoSegment,
    by_tile: dict[int, list[Packet]],
    weights: TileWeights,
    budget: int,
    blank: float,
) -> dict[int, tuple[int, ...]]:
    """Deep-scarcity degradation when the mandatory packets cannot all fit.

    Tiles are ranked by weighted distortion saved per anchor byte and their
    anchor packets kept while they fit; leftover budget then buys further
    packets of anchored tiles, greedily by weighted gain per byte.
    """
    scored = []
    for tile, pkts in sorted(by_tile.items()):
        d = segment.distortion.matrix(tile)
        omega = segment.tile(tile).penalties()
        frames = [p.frame_index for p in pkts]
        anchor = pkts[0]
        none_cost = sum(blank + omega[f] for f in frames)
        anchor_cost = sum(
            float(d[f, anchor.frame_index]) + float(omega[f])
            for f in frames
            if f != anchor.frame_index
        )
        saving = weights.weights[tile] * (none_cost - anchor_cost)
        scored.append((-(saving / anchor.size_bytes), tile, anchor))
    scored.sort(key=lambda s: (s[0], s[1]))

    kept: dict[int, tuple[int, ...]] = {}
    used = 0
    for _, tile, anchor in scored:
        if used + anchor.size_bytes <= budget:
            kept[tile] = (anchor.frame_index,)
            used += anchor.size_bytes

    # Spend the remainder on packets of anchored tiles: gain is the
    # admission reduction relative to anchor-only concealment.
    extras: list[tuple[float, int, int, Packet]] = []
    for tile, ks in kept.items():
        d = segment.distortion.matrix(tile)
        omega = segment.tile(tile).penalties()
        anchor_frame = ks[0]
        frames = [p.frame_index for p in by_tile[tile]]
        last = frames[-1]
        for p in by_tile[tile]:
            f = p.frame_index
            if f == anchor_frame:
                continue
            gain = float(omega[f]) + float(
                np.sum(d[f : last + 1, anchor_frame] - d[f : last + 1, f])
            )
            gain *= weights.weights[tile]
            extras.append((-(gain / p.size_bytes), tile, f, p))
    extras.sort(key=lambda e: (e[0], e[1], e[2]))
    added: dict[int, list[int]] = {}
    for neg_density, tile, f, p in extras:
        if neg_density >= 0.0:
            break
        if used + p.size_bytes <= budget:
            added.setdefault(tile, []).append(f)
            used += p.size_bytes
    for tile, fs in added.items():
        kept[tile] = tuple(sorted(set(kept[tile]) | set(fs)))
    return kept


# --------------------------------------------------------------------------
# Session loop
# --------------------------------------------------------------------------


def run_session(
    segment: VideoSegment,
    predictor,
    strategy: str,
    trace: BandwidthTrace,
    ground_truth: Trajectory,
    config: SessionConfig = SessionConfig(),
) -> MetricsReport:
    """Simulate one streaming session and report the five metrics."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    if config.grid.tile_count != segment.tile_count:
        raise ValueError(
            f"grid has {config.grid.tile_count} tiles but segment has "
            f"{segment.tile_count}"
        )
    n = segment.frames_per_tile
    wf = config.window_frames or segment.tiles[0].gop_length
    window_ms = wf * 1000.0 / config.fps
    horizon = config.horizon_seconds or (window_ms / 1000.0)
    arrival_windows = math.ceil(n / wf)

    tile_order = _interleave_order(segment.tile_count)
    window_arrivals: list[list[Packet]] = []
    for w in range(arrival_windows):
        frames = range(w * wf, min(n, (w + 1) * wf))
        window_arrivals.append(
            [segment.tile(t).packets[f] for f in frames for t in tile_order]
        )
    # Default buffer: one full arrival window loads the queue to 80% of
    # capacity, past the 70% trigger, so congestion decisions are made by the
    # strategy rather than by buffer overflow.
    max_window_bytes = max(sum(p.size_bytes for p in pkts) for pkts in window_arrivals)
    capacity = config.capacity_bytes or -(-5 * max_window_bytes // 4)
    largest_packet = max(p.size_bytes for ts in segment.tiles for p in ts.packets)
    if capacity < largest_packet:
        raise ValueError(
            f"queue capacity {capacity} B is smaller than the largest packet "
            f"({largest_packet} B)"
        )

    node = QueueNode(capacity, config.threshold)
    viewport_flag: dict[tuple[int, int], bool] = {}
    transmitted: list[Packet] = []
    dropped: list[Packet] = []
    windows: list[WindowRecord] = []
    session_viewport: set[int] = set()

    w = 0
    while w < arrival_windows or node.packets:
        t0 = int(round(w * window_ms))
        t1 = int(round((w + 1) * window_ms))
        if t1 > trace.end_ms:
            raise ValueError(
                f"trace shorter than session: window {w} ends at {t1} ms but the "
                f"trace ends at {trace.end_ms} ms"
            )
        budget = int(trace.bytes_between(t0, t1))

        arrivals = window_arrivals[w] if w < arrival_windows else []
        gt_time = min(t0, ground_truth.end_ms)
        classes = classify_tiles(
            ground_truth.at(gt_time), config.grid, config.viewport, config.overlap_samples
        )
        vp_tiles = tuple(
            t for t, c in enumerate(classes) if c >= config.viewport_min_class
        )
        if arrivals:
            session_viewport.update(vp_tiles)

        arrived_count = len(arrivals)
        for p in arrivals:
            viewport_flag[p.tile_index, p.frame_index] = p.tile_index in vp_tiles
            if not node.offer(p):
                dropped.append(p)  # buffer overflow, tail-dropped at entry

        queue_before = node.bytes_queued
        invoked = node.over_threshold()
        sent_bytes_window = 0
        sent_count = 0
        dropped_count_before = len(dropped)
        if invoked and node.packets:
            queued = node.drain_all()
            if strategy == "baseline":
                kept, shed = _split_queue(queued, baselines.tail_drop(queued, budget))
            elif strategy == "ipb":
                kept, shed = _split_queue(queued, baselines.ipb_drop(queued, budget))
            elif strategy == "nirap":
                kept, shed = _split_queue(queued, baselines.nirap_drop(queued, budget))
            else:
                if strategy == "twrd":
                    pred = predictor.predict(ground_truth.up_to(gt_time), gt_time, horizon)
                    rep = pred.representative()
                    weights = weights_for_prediction(
                        rep.point,
                        rep.probability,
                        config.grid,
                        config.viewport,
                        config.overlap_samples,
                    )
                else:
                    weights = TileWeights.uniform(segment.tile_count)
                kept, shed = _rd_window_schedule(
                    segment, queued, weights, budget, config.quantum_bytes,
                    config.blank_distortion,
                )
            transmitted.extend(kept)
            dropped.extend(shed)
            sent_bytes_window = sum(p.size_bytes for p in kept)
            sent_count = len(kept)
        else:
            kept = node.pop_front_within(budget)
            transmitted.extend(kept)
            sent_bytes_window = sum(p.size_bytes for p in kept)
            sent_count = len(kept)

        windows.append(
            WindowRecord(
                index=w,
                start_ms=t0,
                end_ms=t1,
                budget_bytes=budget,
                arrived=arrived_count,
                transmitted=sent_count,
                dropped=len(dropped) - dropped_count_before,
                transmitted_bytes=sent_bytes_window,
                scheduler_invoked=bool(invoked),
                queue_bytes_before=queue_before,
                queue_bytes_after=node.bytes_queued,
                viewport_tiles=vp_tiles,
            )
        )
        w += 1

    resolved = config.to_dict() | {
        "capacity_bytes": capacity,
        "window_frames": wf,
        "horizon_seconds": horizon,
        "strategy": strategy,
    }
    return compute_metrics(
        segment, strategy, transmitted, dropped, viewport_flag,
        tuple(sorted(session_viewport)), tuple(windows), config, resolved,
    )


def _split_queue(
    queue: Sequence[Packet], sched: Schedule
) -> tuple[list[Packet], list[Packet]]:
    kept_ids = {
        (tile, f) for tile, ks in enumerate(sched.kept) for f in ks
    }
    kept = [p for p in queue if (p.tile_index, p.frame_index) in kept_ids]
    shed = [p for p in queue if (p.tile_index, p.frame_index) not in kept_ids]
    return kept, shed


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


def compute_metrics(
    segment: VideoSegment,
    strategy: str,
    transmitted: Sequence[Packet],
    dropped: Sequence[Packet],
    viewport_flag: dict[tuple[int, int], bool],
    viewport_tiles: tuple[int, ...],
    windows: tuple[WindowRecord, ...],
    config: SessionConfig,
    resolved_config: dict | None = None,
) -> MetricsReport:
    offered = segment.packet_count
    if len(transmitted) + len(dropped) != offered:
        raise RuntimeError(
            f"conservation violated: {len(transmitted)} sent + {len(dropped)} "
            f"dropped != {offered} offered"
        )
    kept_per_tile: list[list[int]] = [[] for _ in range(segment.tile_count)]
    for p in transmitted:
        kept_per_tile[p.tile_index].append(p.frame_index)
    kept = tuple(tuple(sorted(ks)) for ks in kept_per_tile)

    blank = config.blank_distortion
    raw_total = _segment_distortion(segment, kept, blank)
    base_total = _segment_distortion(
        segment, tuple((0,) for _ in range(segment.tile_count)), blank
    )
    raw_vp = _segment_distortion(segment, kept, blank, tiles=viewport_tiles)
    base_vp = _segment_distortion(
        segment,
        tuple((0,) for _ in range(segment.tile_count)),
        blank,
        tiles=viewport_tiles,
    )

    dropped_vp = sum(1 for p in dropped if viewport_flag.get((p.tile_index, p.frame_index)))
    offered_vp = sum(1 for key, flag in viewport_flag.items() if flag)
    sent_bytes = sum(p.size_bytes for p in transmitted)
    sent_vp_bytes = sum(
        p.size_bytes
        for p in transmitted
        if viewport_flag.get((p.tile_index, p.frame_index))
    )
    loss_denom = offered if config.viewport_loss_denominator == "total" else max(offered_vp, 1)

    return MetricsReport(
        strategy=strategy,
        total_distortion=100.0 * raw_total / base_total if base_total > 0 else 0.0,
        viewport_distortion=100.0 * raw_vp / base_vp if base_vp > 0 else 0.0,
        total_packet_loss_pct=100.0 * len(dropped) / offered,
        viewport_packet_loss_pct=100.0 * dropped_vp / loss_denom,
        viewport_bandwidth_consumption_pct=(
            100.0 * sent_vp_bytes / sent_bytes if sent_bytes > 0 else 0.0
        ),
        raw_total_distortion=raw_total,
        raw_viewport_distortion=raw_vp,
        normalization_base=base_total,
        viewport_normalization_base=base_vp,
        offered_packets=offered,
        transmitted_packets=len(transmitted),
        dropped_packets=len(dropped),
        dropped_viewport_packets=dropped_vp,
        transmitted_bytes=sent_bytes,
        viewport_transmitted_bytes=sent_vp_bytes,
        viewport_tiles=viewport_tiles,
        kept_per_tile=kept,
        windows=windows,
        config=resolved_config if resolved_config is not None else config.to_dict(),
    )


# --------------------------------------------------------------------------
# Strategy comparison
# --------------------------------------------------------------------------


def salient_viewpoint(segment: VideoSegment, grid: TileGrid = TileGrid()) -> Viewpoint:
    """Center of the tile with the largest distortion mass (gaze target)."""
    if grid.tile_count != segment.tile_count:
        raise ValueError("grid size must match the segment")
    best_tile, best_mass = 0, -1.0
    for tile in range(segment.tile_count):
        d = segment.distortion.matrix(tile)
        m = float(d[:, 0].sum() + segment.tile(tile).penalties().sum())
        if m > best_mass:
            best_tile, best_mass = tile, m
    return grid.center(best_tile)


def synth_corpus(
    synth_config, *, fps: float = 25.0, grid: TileGrid = TileGrid()
) -> tuple[VideoSegment, Trajectory]:
    """Seeded segment plus a salience-following static gaze.

    The viewer rests on the synthetic activity field's hotspot center, the
    same attention model the generator used to lay out content complexity.
    """
    from .media import synth_hotspot, synth_video
    from .predictor import static_trajectory

    segment = synth_video(synth_config)
    gaze_tile = synth_hotspot(synth_config)
    duration = segment.frames_per_tile / fps
    return segment, static_trajectory(grid.center(gaze_tile), duration * 3)


@dataclass(frozen=True)
class ComparisonTable:
    """Per (strategy, trace) metric means and standard deviations."""

    rows: tuple[dict, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["strategy", "trace", "seeds"]
        for m in METRIC_FIELDS:
            fields += [f"{m}_mean", f"{m}_std"]
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in fields})
        return buf.getvalue()


def compare_strategies(
    segments: VideoSegment | Sequence[VideoSegment],
    traces: Sequence[tuple[str, BandwidthTrace]],
    seeds: Sequence[int],
    *,
    probability: float = 0.8,
    config: SessionConfig = SessionConfig(),
    trajectory_for: Callable[[int, VideoSegment], Trajectory] | None = None,
    strategies: Sequence[str] = STRATEGIES,
) -> tuple[ComparisonTable, dict]:
    """Run every strategy on identical per-seed inputs across all traces.

    Returns the aggregated table plus the raw per-seed metric values keyed
    by (strategy, trace label, metric).
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    seg_list = [segments] if isinstance(segments, VideoSegment) else list(segments)

    def default_traj(seed: int, seg: VideoSegment) -> Trajectory:
        from .predictor import static_trajectory

        duration = seg.frames_per_tile / config.fps
        return static_trajectory(salient_viewpoint(seg, config.grid), duration * 2)

    traj_fn = trajectory_for or default_traj
    raw: dict[tuple[str, str, str], list[float]] = {}
    for i, seed in enumerate(seeds):
        seg = seg_list[i % len(seg_list)]
        gt = traj_fn(seed, seg)
        predictor = GroundTruthPredictor(gt, probability)
        for label, trace in traces:
            for strat in strategies:
                report = run_session(seg, predictor, strat, trace, gt, config)
                for m, v in report.metrics().items():
                    raw.setdefault((strat, label, m), []).append(v)

    rows = []
    for strat in strategies:
        for label, _ in traces:
            row: dict = {"strategy": strat, "trace": label, "seeds": len(seeds)}
            for m in METRIC_FIELDS:
                vals = raw[(strat, label, m)]
                row[f"{m}_mean"] = float(np.mean(vals))
                row[f"{m}_std"] = float(np.std(vals))
            rows.append(row)
    return ComparisonTable(tuple(rows)), {k: list(v) for k, v in raw.items()}
