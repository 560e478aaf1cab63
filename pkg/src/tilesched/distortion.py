"""Concealment-based reconstruction and distortion functionals.

A dropped frame is replaced by the nearest previous kept frame of the same
tile. The distortion of a transmission set is the sum of per-frame
concealment distortions plus the propagation penalties of every dropped
packet; losses are additive by assumption. Frame 0 of every tile is always
kept, so a concealment reference always exists here; schedules that violate
that (pure heuristics under extreme scarcity) are evaluated by the
simulator's extended evaluator instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .media import VideoSegment


def _check_kept(kept: Sequence[int], n: int) -> tuple[int, ...]:
    ks = tuple(kept)
    if not ks or ks[0] != 0:
        raise ValueError("transmission set must contain frame 0")
    prev = -1
    for k in ks:
        if k <= prev:
            raise ValueError("kept indices must be strictly increasing")
        prev = k
    if prev >= n:
        raise ValueError(f"kept index {prev} out of range for n={n}")
    return ks


@dataclass(frozen=True)
class TransmissionSet:
    """Per-tile sorted kept frame indices; frame 0 is always a member."""

    kept: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not self.kept:
            raise ValueError("transmission set needs at least one tile")
        for ks in self.kept:
            _check_kept(ks, n=max(ks) + 1)

    @classmethod
    def full(cls, tiles: int, frames: int) -> "TransmissionSet":
        return cls(tuple(tuple(range(frames)) for _ in range(tiles)))

    def validate_for(self, segment: VideoSegment) -> None:
        if len(self.kept) != segment.tile_count:
            raise ValueError("transmission set tile count does not match segment")
        n = segment.frames_per_tile
        for ks in self.kept:
            _check_kept(ks, n)

    def dropped(self, frames: int) -> tuple[tuple[int, ...], ...]:
        """Complement per tile: P = K ∪ S, disjoint."""
        out = []
        for ks in self.kept:
            mask = np.ones(frames, dtype=bool)
            mask[list(ks)] = False
            out.append(tuple(int(i) for i in np.nonzero(mask)[0]))
        return tuple(out)


def conceal(kept: Sequence[int], n: int) -> np.ndarray:
    """Reference map: r[i] is the nearest kept frame at or before i."""
    ks = _check_kept(kept, n)
    marks = np.full(n, -1, dtype=np.int64)
    marks[list(ks)] = list(ks)
    return np.maximum.accumulate(marks)


def _tile_set_distortion(d: np.ndarray, omega: np.ndarray, kept: Sequence[int]) -> float:
    n = d.shape[0]
    refs = conceal(kept, n)
    kept_mask = np.zeros(n, dtype=bool)
    kept_mask[list(kept)] = True
    total = 0.0
    # Accumulated per dropped packet, in ascending order, so that the sum of
    # packet_distortion over the dropped set reproduces this value exactly.
    for i in range(n):
        if not kept_mask[i]:
            total += d[i, refs[i]] + omega[i]
    return float(total)


def set_distortion(segment: VideoSegment, tile: int, kept: Sequence[int]) -> float:
    """Total distortion of one tile under transmission set ``kept``."""
    d = segment.distortion.matrix(tile)
    omega = segment.tile(tile).penalties()
    _check_kept(kept, segment.frames_per_tile)
    return _tile_set_distortion(d, omega, kept)


def packet_distortion(segment: VideoSegment, tile: int, frame: int, kept: Sequence[int]) -> float:
    """Distortion charged to one dropped packet: concealment term plus penalty."""
    ks = _check_kept(kept, segment.frames_per_tile)
    if frame in ks:
        raise ValueError(f"packet {frame} is in the transmission set, not dropped")
    if not 0 <= frame < segment.frames_per_tile:
        raise ValueError(f"frame {frame} out of range")
    refs = conceal(ks, segment.frames_per_tile)
    d = segment.distortion.matrix(tile)
    omega = segment.tile(tile).penalties()
    return float(d[frame, refs[frame]] + omega[frame])


def weighted_distortion(
    segment: VideoSegment, tset: TransmissionSet, weights: Sequence[float]
) -> float:
    """Tile-weighted total distortion over the whole segment."""
    tset.validate_for(segment)
    if len(weights) != segment.tile_count:
        raise ValueError(
            f"expected {segment.tile_count} tile weights, got {len(weights)}"
        )
    for w in weights:
        if w < 0.0 or not np.isfinite(w):
            raise ValueError("tile weights must be finite and non-negative")
    total = 0.0
    for tile, ks in enumerate(tset.kept):
        total += weights[tile] * set_distortion(segment, tile, ks)
    return total
