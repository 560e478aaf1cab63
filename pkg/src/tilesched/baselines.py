"""The four comparison scheduling strategies.

Tail drop, frame-type priority (IPB), and non-IRAP-first (NIRAP) operate on
an arrival-ordered queue of packets and know nothing about distortion.
EWRD is the rate-distortion scheduler with every tile weighted equally.
None of these enforce frame-0 retention; the simulator's evaluator charges
blank-frame distortion when an anchor is lost.
"""

from __future__ import annotations

from typing import Sequence

from .media import FrameType, Packet, VideoSegment
from .scheduler import DEFAULT_QUANTUM_BYTES, Schedule, schedule


def _to_schedule(
    segment: VideoSegment | None,
    tiles: int,
    frames: int,
    kept_packets: Sequence[Packet],
) -> Schedule:
    kept_per_tile: list[list[int]] = [[] for _ in range(tiles)]
    for p in kept_packets:
        kept_per_tile[p.tile_index].append(p.frame_index)
    kept = tuple(tuple(sorted(ks)) for ks in kept_per_tile)
    dropped = tuple(
        tuple(i for i in range(frames) if i not in set(ks)) for ks in kept
    )
    rate = sum(p.size_bytes for p in kept_packets)
    return Schedule(kept, dropped, rate, None)


def _queue_shape(queue: Sequence[Packet]) -> tuple[int, int]:
    tiles = max(p.tile_index for p in queue) + 1
    frames = max(p.frame_index for p in queue) + 1
    return tiles, frames


def tail_drop(queue: Sequence[Packet], budget_bytes: int) -> Schedule:
    """Keep arrivals in order until the budget runs out; drop the remainder."""
    if not queue:
        return Schedule((), (), 0, None)
    tiles, frames = _queue_shape(queue)
    kept = []
    used = 0
    for p in queue:
        if used + p.size_bytes > budget_bytes:
            break
        kept.append(p)
        used += p.size_bytes
    return _to_schedule(None, tiles, frames, kept)


def _priority_drop(
    queue: Sequence[Packet], budget_bytes: int, drop_order: Sequence[Sequence[FrameType]]
) -> Schedule:
    if not queue:
        return Schedule((), (), 0, None)
    tiles, frames = _queue_shape(queue)
    total = sum(p.size_bytes for p in queue)
    dropped: set[tuple[int, int]] = set()
    for types in drop_order:
        group = set(types)
        for p in queue:
            if total <= budget_bytes:
                break
            if p.frame_type in group:
                dropped.add((p.tile_index, p.frame_index))
                total -= p.size_bytes
        if total <= budget_bytes:
            break
    kept = [p for p in queue if (p.tile_index, p.frame_index) not in dropped]
    return _to_schedule(None, tiles, frames, kept)


def ipb_drop(queue: Sequence[Packet], budget_bytes: int) -> Schedule:
    """Drop B packets first (arrival order), then P, then I, until it fits."""
    return _priority_drop(
        queue, budget_bytes, ((FrameType.B,), (FrameType.P,), (FrameType.I,))
    )


def nirap_drop(queue: Sequence[Packet], budget_bytes: int) -> Schedule:
    """Drop non-IRAP packets (P and B, interleaved by arrival) before any I."""
    return _priority_drop(
        queue, budget_bytes, ((FrameType.P, FrameType.B), (FrameType.I,))
    )


def ewrd_schedule(
    segment: VideoSegment,
    budget_bytes: int,
    quantum_bytes: int = DEFAULT_QUANTUM_BYTES,
) -> Schedule:
    """Equal-weighted rate-distortion scheduling: every tile weight is 1."""
    uniform = tuple(1.0 for _ in range(segment.tile_count))
    return schedule(segment, uniform, budget_bytes, quantum_bytes)
