"""Rate-constrained packet scheduling via a trellis over transmission sets.

Per tile, states describe chains ``0 = s_0 < ... < s_{m-1} = e`` of kept
packets. A state's cost is the full concealment distortion of keeping
exactly that chain: the initial state keeps only frame 0 (everything else
concealed by it, all penalties charged), and admitting packet ``e`` after
``s_prev`` subtracts the transition gain ``phi(s_prev, e)``.

Because the byte budget is a hard constraint and packet sizes are
arbitrary, a single best-cost label per (count, last-packet) state is not
sufficient for optimality; the trellis instead keeps every nondominated
(cost, rate) label per last-packet node, pruning labels whose rate already
exceeds the budget. This stays exact while the per-node label count stays
small, and quadratic in the queue length for a fixed budget.

Tiles are coupled through a multiple-choice knapsack over their
rate-distortion curves, with rates quantized upward to a configurable
granularity so the byte budget is never exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distortion import conceal
from .media import VideoSegment
from .viewport import TileWeights

DEFAULT_QUANTUM_BYTES = 188
BRUTE_FORCE_PACKET_LIMIT = 20


class InfeasibleBudgetError(ValueError):
    """The byte budget cannot cover the mandatory packets."""

    def __init__(self, message: str, tiles: tuple[int, ...] = ()):
        super().__init__(message)
        self.tiles = tiles


@dataclass(frozen=True)
class TileSchedule:
    """Scheduling outcome for a single tile."""

    tile_index: int
    kept: tuple[int, ...]
    rate_bytes: int
    weighted_distortion: float

    def dropped(self, frames: int) -> tuple[int, ...]:
        kept = set(self.kept)
        return tuple(i for i in range(frames) if i not in kept)


@dataclass(frozen=True)
class Schedule:
    """Global transmission/drop partition with its rate and distortion.

    Heuristic strategies do not consult distortion tables and leave
    ``weighted_distortion`` as None; the simulator evaluates their outcome.
    """

    kept: tuple[tuple[int, ...], ...]
    dropped: tuple[tuple[int, ...], ...]
    rate_bytes: int
    weighted_distortion: float | None

    @classmethod
    def from_kept(
        cls,
        segment: VideoSegment,
        kept_per_tile: Sequence[Sequence[int]],
        weighted_distortion: float,
    ) -> "Schedule":
        n = segment.frames_per_tile
        kept = tuple(tuple(int(i) for i in ks) for ks in kept_per_tile)
        dropped = []
        rate = 0
        for tile, ks in enumerate(kept):
            sizes = segment.tile(tile).sizes()
            rate += int(sizes[list(ks)].sum()) if ks else 0
            keep = set(ks)
            dropped.append(tuple(i for i in range(n) if i not in keep))
        return cls(kept, tuple(dropped), rate, weighted_distortion)

    @property
    def total_kept(self) -> int:
        return sum(len(ks) for ks in self.kept)

    @property
    def total_dropped(self) -> int:
        return sum(len(ks) for ks in self.dropped)


@dataclass(frozen=True)
class TrellisState:
    """One surviving trellis label: a chain of kept packets ending at ``e``."""

    m: int
    e: int
    best_cost: float
    predecessor: int
    rate_used: int


@dataclass(frozen=True)
class RdPoint:
    rate_bytes: int
    distortion: float
    kept: tuple[int, ...]


@dataclass(frozen=True)
class RdCurve:
    """Pareto frontier of one tile: rising rate, falling weighted distortion."""

    tile_index: int
    lam: float
    points: tuple[RdPoint, ...]


# --------------------------------------------------------------------------
# Tile array access
# --------------------------------------------------------------------------


def _tile_arrays(
    segment: VideoSegment, tile: int, frames: range | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = segment.distortion.matrix(tile)
    omega = segment.tile(tile).penalties()
    sizes = segment.tile(tile).sizes()
    if frames is not None:
        sl = slice(frames.start, frames.stop)
        d = d[sl, sl]
        omega = omega[sl]
        sizes = sizes[sl]
    return d, omega, sizes


def tile_set_cost(d: np.ndarray, omega: np.ndarray, kept: Sequence[int]) -> float:
    """Engine-order recomputation of a chain's distortion (test anchor)."""
    n = d.shape[0]
    refs = conceal(kept, n)
    keep = np.zeros(n, dtype=bool)
    keep[list(kept)] = True
    total = 0.0
    for i in range(n):
        if not keep[i]:
            total += d[i, refs[i]] + omega[i]
    return float(total)


# --------------------------------------------------------------------------
# Transition gain
# --------------------------------------------------------------------------


def phi(segment: VideoSegment, tile: int, s_prev: int, e: int, lam: float) -> float:
    """Weighted distortion reduction from admitting packet ``e`` after ``s_prev``."""
    n = segment.frames_per_tile
    if not 0 <= s_prev < e < n:
        raise ValueError(f"need 0 <= s_prev < e < n, got s_prev={s_prev}, e={e}")
    d = segment.distortion.matrix(tile)
    omega = segment.tile(tile).penalties()
    gain = omega[e] + float(np.sum(d[e:, s_prev] - d[e:, e]))
    return lam * float(gain)


# --------------------------------------------------------------------------
# Exact label trellis
# --------------------------------------------------------------------------


class _Labels:
    """Growable arrays of trellis labels."""

    __slots__ = ("cost", "rate", "node", "m", "src", "count")

    def __init__(self, cap: int = 256):
        self.cost = np.empty(cap, dtype=np.float64)
        self.rate = np.empty(cap, dtype=np.int64)
        self.node = np.empty(cap, dtype=np.int64)
        self.m = np.empty(cap, dtype=np.int64)
        self.src = np.empty(cap, dtype=np.int64)
        self.count = 0

    def _grow(self, need: int) -> None:
        cap = len(self.cost)
        if self.count + need <= cap:
            return
        new_cap = max(cap * 2, self.count + need)
        for name in ("cost", "rate", "node", "m", "src"):
            old = getattr(self, name)
            arr = np.empty(new_cap, dtype=old.dtype)
            arr[: self.count] = old[: self.count]
            setattr(self, name, arr)

    def append_block(self, cost, rate, node, m, src) -> None:
        k = len(cost)
        self._grow(k)
        s = self.count
        self.cost[s : s + k] = cost
        self.rate[s : s + k] = rate
        self.node[s : s + k] = node
        self.m[s : s + k] = m
        self.src[s : s + k] = src
        self.count += k


def _run_trellis(
    d: np.ndarray, omega: np.ndarray, sizes: np.ndarray, budget: int | None
) -> _Labels:
    """All nondominated budget-feasible chains, every one starting at frame 0."""
    n = d.shape[0]
    size0 = int(sizes[0])
    if budget is not None and budget < size0:
        raise InfeasibleBudgetError(
            f"budget {budget} cannot cover the mandatory frame-0 packet ({size0} bytes)"
        )
    # Suffix sums over frames: ss[k, j] = sum_{i >= k} d[i, j].
    ss = np.zeros((n + 1, n), dtype=np.float64)
    ss[:n] = np.cumsum(d[::-1, :], axis=0)[::-1]
    suffix_omega = np.zeros(n + 1, dtype=np.float64)
    suffix_omega[:n] = np.cumsum(omega[::-1])[::-1]

    labels = _Labels()
    init_cost = float(ss[1, 0] + suffix_omega[1]) if n > 1 else 0.0
    labels.append_block([init_cost], [size0], [0], [1], [-1])

    for e in range(1, n):
        # Transition gain from any source node j < e, as a vector over j.
        phi_col = omega[e] + ss[e, :e] - ss[e, e]
        cnt = labels.count
        src_nodes = labels.node[:cnt]
        cand_cost = labels.cost[:cnt] - phi_col[src_nodes]
        cand_rate = labels.rate[:cnt] + int(sizes[e])
        if budget is not None:
            feas = np.nonzero(cand_rate <= budget)[0]
        else:
            feas = np.arange(cnt)
        if feas.size == 0:
            continue
        cc = cand_cost[feas]
        cr = cand_rate[feas]
        # Sort by rate then cost (stable, so exact ties keep insertion
        # order); keep strict cost improvements.
        order = np.lexsort((cc, cr))
        cc_sorted = cc[order]
        keep = np.empty(order.size, dtype=bool)
        keep[0] = True
        if order.size > 1:
            run_min = np.minimum.accumulate(cc_sorted)
            keep[1:] = cc_sorted[1:] < run_min[:-1]
        sel = order[keep]
        srcs = feas[sel]
        labels.append_block(
            cc[sel], cr[sel], np.full(sel.size, e, dtype=np.int64), labels.m[srcs] + 1, srcs
        )
    return labels


def _backtrack(labels: _Labels, idx: int) -> tuple[int, ...]:
    chain = []
    while idx >= 0:
        chain.append(int(labels.node[idx]))
        idx = int(labels.src[idx])
    chain.reverse()
    return tuple(chain)


def trellis_states(
    segment: VideoSegment, tile: int, budget_bytes: int | None = None
) -> list[TrellisState]:
    """Surviving labels as inspectable states (unweighted costs)."""
    d, omega, sizes = _tile_arrays(segment, tile)
    labels = _run_trellis(d, omega, sizes, budget_bytes)
    out = []
    for i in range(labels.count):
        src = int(labels.src[i])
        pred = int(labels.node[src]) if src >= 0 else -1
        out.append(
            TrellisState(
                m=int(labels.m[i]),
                e=int(labels.node[i]),
                best_cost=float(labels.cost[i]),
                predecessor=pred,
                rate_used=int(labels.rate[i]),
            )
        )
    return out


def _dp_arrays(
    d: np.ndarray, omega: np.ndarray, sizes: np.ndarray, lam: float, budget: int
) -> tuple[tuple[int, ...], int, float]:
    """Optimal kept chain for one tile's arrays under a byte budget."""
    labels = _run_trellis(d, omega, sizes, int(budget))
    cnt = labels.count
    cost = labels.cost[:cnt]
    rate = labels.rate[:cnt]
    node = labels.node[:cnt]
    m = labels.m[:cnt]
    if lam == 0.0:
        # Objective vanishes; ties break toward the smallest rate, then e.
        order = np.lexsort((np.arange(cnt), m, node, rate))
    else:
        order = np.lexsort((np.arange(cnt), m, node, rate, cost))
    best = int(order[0])
    kept = _backtrack(labels, best)
    return kept, int(rate[best]), lam * float(cost[best])


def dp_single_tile(
    segment: VideoSegment,
    tile: int,
    lam: float,
    budget_bytes: int,
    frames: range | None = None,
) -> TileSchedule:
    """Budget-optimal transmission set for one tile (frame 0 always kept)."""
    if lam < 0.0:
        raise ValueError("tile weight must be non-negative")
    d, omega, sizes = _tile_arrays(segment, tile, frames)
    kept, rate, _ = _dp_arrays(d, omega, sizes, lam, budget_bytes)
    # Report the engine's own recomputation, exact by construction.
    weighted = lam * tile_set_cost(d, omega, kept)
    if frames is not None:
        kept = tuple(k + frames.start for k in kept)
    return TileSchedule(tile, kept, rate, weighted)


# --------------------------------------------------------------------------
# Rate-distortion curves
# --------------------------------------------------------------------------


def _curve_arrays(
    d: np.ndarray, omega: np.ndarray, sizes: np.ndarray, lam: float, max_rate: int | None
) -> list[tuple[int, float, tuple[int, ...]]]:
    labels = _run_trellis(d, omega, sizes, max_rate)
    cnt = labels.count
    cost = labels.cost[:cnt]
    rate = labels.rate[:cnt]
    order = np.lexsort((np.arange(cnt), cost, rate))
    sorted_cost = cost[order]
    keep = np.empty(cnt, dtype=bool)
    keep[0] = True
    if cnt > 1:
        run_min = np.minimum.accumulate(sorted_cost)
        keep[1:] = sorted_cost[1:] < run_min[:-1]
    picks = order[keep]

    # Materialize with engine-order recomputation, then enforce strict descent
    # again: exact distortions can tie where trellis sums differ by rounding,
    # and a zero weight collapses the curve to the mandatory point.
    points: list[tuple[int, float, tuple[int, ...]]] = []
    best = np.inf
    for idx in picks:
        kept = _backtrack(labels, int(idx))
        dist = lam * tile_set_cost(d, omega, kept)
        if dist < best:
            points.append((int(rate[idx]), dist, kept))
            best = dist
    return points


def per_tile_rd_curve(
    segment: VideoSegment,
    tile: int,
    lam: float,
    max_rate: int | None = None,
    frames: range | None = None,
) -> RdCurve:
    """Pareto-pruned rate/distortion frontier for one tile."""
    if lam < 0.0:
        raise ValueError("tile weight must be non-negative")
    d, omega, sizes = _tile_arrays(segment, tile, frames)
    pts = _curve_arrays(d, omega, sizes, lam, max_rate)
    offset = frames.start if frames is not None else 0
    return RdCurve(
        tile,
        lam,
        tuple(
            RdPoint(rate, dist, tuple(k + offset for k in kept))
            for rate, dist, kept in pts
        ),
    )


# --------------------------------------------------------------------------
# Global budget allocation (multiple-choice knapsack)
# --------------------------------------------------------------------------


def allocate_budget(
    curves: Sequence[RdCurve],
    budget_bytes: int,
    quantum_bytes: int = DEFAULT_QUANTUM_BYTES,
) -> list[TileSchedule]:
    """Pick one curve point per tile minimizing total weighted distortion.

    Rates are quantized upward to ``quantum_bytes``-sized levels, so the
    selected points always satisfy the true byte budget; the cost penalty is
    at most one quantum of budget per tile. With ``quantum_bytes=1`` and
    integer sizes the allocation is exact.
    """
    if quantum_bytes <= 0:
        raise ValueError("quantum must be a positive byte count")
    if not curves:
        raise ValueError("no curves to allocate over")
    levels = budget_bytes // quantum_bytes

    quantized: list[list[tuple[int, float, RdPoint]]] = []
    mandatory = []
    for curve in curves:
        pts = []
        for p in curve.points:
            w = -(-p.rate_bytes // quantum_bytes)  # ceil
            pts.append((int(w), p.distortion, p))
        # Per level keep the cheapest point, then drop dominated levels.
        pts.sort(key=lambda t: (t[0], t[1], t[2].rate_bytes))
        pruned: list[tuple[int, float, RdPoint]] = []
        best = np.inf
        seen_level = -1
        for w, c, p in pts:
            if w == seen_level:
                continue
            if c < best:
                pruned.append((w, c, p))
                best = c
                seen_level = w
        quantized.append(pruned)
        mandatory.append(pruned[0][0])

    if sum(mandatory) > levels:
        tiles = tuple(c.tile_index for c in curves)
        detail = ", ".join(
            f"tile {c.tile_index}: {c.points[0].rate_bytes} B"
            for c in curves
        )
        raise InfeasibleBudgetError(
            f"budget {budget_bytes} B cannot cover the mandatory packets of all "
            f"tiles ({detail})",
            tiles=tiles,
        )

    dp = np.zeros(levels + 1, dtype=np.float64)
    choices: list[np.ndarray] = []
    for pts in quantized:
        stack = np.full((len(pts), levels + 1), np.inf, dtype=np.float64)
        for k, (w, c, _) in enumerate(pts):
            if w <= levels:
                stack[k, w:] = dp[: levels + 1 - w] + c
        dp = stack.min(axis=0)
        choices.append(stack.argmin(axis=0))

    if not np.isfinite(dp[levels]):
        raise InfeasibleBudgetError("no feasible combination of curve points")

    picks: list[TileSchedule] = []
    w = levels
    for tile_pos in range(len(curves) - 1, -1, -1):
        k = int(choices[tile_pos][w])
        wq, dist, point = quantized[tile_pos][k]
        picks.append(
            TileSchedule(curves[tile_pos].tile_index, point.kept, point.rate_bytes, dist)
        )
        w -= wq
    picks.reverse()
    return picks


def schedule(
    segment: VideoSegment,
    weights: TileWeights | Sequence[float],
    budget_bytes: int,
    quantum_bytes: int = DEFAULT_QUANTUM_BYTES,
) -> Schedule:
    """End-to-end weighted scheduling: per-tile curves plus global allocation."""
    lam = weights.weights if isinstance(weights, TileWeights) else tuple(weights)
    if len(lam) != segment.tile_count:
        raise ValueError(f"expected {segment.tile_count} weights, got {len(lam)}")
    curves = [
        per_tile_rd_curve(segment, tile, lam[tile], max_rate=budget_bytes)
        for tile in range(segment.tile_count)
    ]
    picks = allocate_budget(curves, budget_bytes, quantum_bytes)
    total = float(sum(p.weighted_distortion for p in picks))
    return Schedule.from_kept(segment, [p.kept for p in picks], total)


# --------------------------------------------------------------------------
# Brute-force oracle
# --------------------------------------------------------------------------


def enumerate_tile_options(
    d: np.ndarray, omega: np.ndarray, sizes: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Every transmission set containing frame 0: (masks, costs, rates)."""
    n = len(sizes)
    if n > 21:
        raise ValueError(f"exhaustive enumeration limited to small tiles, n={n}")
    count = 1 << (n - 1)
    masks = np.ones((count, n), dtype=bool)
    if n > 1:
        bits = (np.arange(count)[:, None] >> np.arange(n - 1)[None, :]) & 1
        masks[:, 1:] = bits.astype(bool)
    idx = np.arange(n)
    marks = np.where(masks, idx[None, :], -1)
    refs = np.maximum.accumulate(marks, axis=1)
    costs = d[idx[None, :], refs].sum(axis=1) + (omega[None, :] * ~masks).sum(axis=1)
    rates = (sizes[None, :].astype(np.int64) * masks).sum(axis=1)
    return masks, costs, rates


def brute_force_schedule(
    segment: VideoSegment,
    weights: TileWeights | Sequence[float],
    budget_bytes: int,
) -> Schedule:
    """Exhaustive exact optimum; guarded to tiny instances."""
    if segment.packet_count > BRUTE_FORCE_PACKET_LIMIT:
        raise ValueError(
            f"instance too large for brute force: {segment.packet_count} packets "
            f"(limit {BRUTE_FORCE_PACKET_LIMIT})"
        )
    lam = weights.weights if isinstance(weights, TileWeights) else tuple(weights)
    if len(lam) != segment.tile_count:
        raise ValueError(f"expected {segment.tile_count} weights, got {len(lam)}")

    per_tile = []
    for tile in range(segment.tile_count):
        d, omega, sizes = _tile_arrays(segment, tile)
        masks, costs, rates = enumerate_tile_options(d, omega, sizes)
        per_tile.append((masks, lam[tile] * costs, rates))

    total_cost = np.zeros(1, dtype=np.float64)
    total_rate = np.zeros(1, dtype=np.int64)
    for _, costs, rates in per_tile:
        total_cost = (total_cost[:, None] + costs[None, :]).ravel()
        total_rate = (total_rate[:, None] + rates[None, :]).ravel()

    feasible = np.nonzero(total_rate <= budget_bytes)[0]
    if feasible.size == 0:
        raise InfeasibleBudgetError(
            f"budget {budget_bytes} B cannot cover the mandatory packets"
        )
    order = np.lexsort((feasible, total_rate[feasible], total_cost[feasible]))
    best = int(feasible[order[0]])

    kept_per_tile = []
    shape = [len(c) for _, c, _ in per_tile]
    for tile in range(segment.tile_count - 1, -1, -1):
        best, opt = divmod(best, shape[tile])
        masks = per_tile[tile][0]
        kept_per_tile.append(tuple(int(i) for i in np.nonzero(masks[opt])[0]))
    kept_per_tile.reverse()

    total = 0.0
    for tile, ks in enumerate(kept_per_tile):
        d, omega, _ = _tile_arrays(segment, tile)
        total += lam[tile] * tile_set_cost(d, omega, ks)
    return Schedule.from_kept(segment, kept_per_tile, total)
