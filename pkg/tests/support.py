"""Instance generators and independent oracles shared across tests."""

from __future__ import annotations

import numpy as np
from tilesched.media import (
    DistortionTable,
    FrameType,
    Packet,
    TileStream,
    VideoSegment,
)


def make_tile_arrays(rng: np.random.Generator, n: int, max_size: int = 50):
    """Random lower-triangular distortion, penalties, and integer sizes."""
    d = np.zeros((n, n))
    ii, jj = np.tril_indices(n, k=-1)
    d[ii, jj] = rng.random(len(ii))
    omega = rng.random(n) * (rng.random(n) < 0.5)
    omega[0] = omega[0] if rng.random() < 0.5 else 0.0
    sizes = rng.integers(1, max_size + 1, size=n)
    return d, omega, sizes


def build_segment(d_tables, omegas, sizes_list, gop_length=None):
    """Assemble a VideoSegment from raw per-tile arrays (frame 0 typed I)."""
    streams = []
    n = len(sizes_list[0])
    gop = gop_length or n
    for tile, (omega, sizes) in enumerate(zip(omegas, sizes_list)):
        packets = []
        for f in range(n):
            ftype = FrameType.I if f == 0 else (FrameType.P if omega[f] > 0 else FrameType.B)
            packets.append(Packet(tile, f, ftype, int(sizes[f]), float(omega[f])))
        streams.append(TileStream(tile, tuple(packets), gop))
    return VideoSegment(tuple(streams), DistortionTable(d_tables))


def random_segment(rng: np.random.Generator, tiles: int, n: int, max_size: int = 50):
    ds, oms, szs = [], [], []
    for _ in range(tiles):
        d, omega, sizes = make_tile_arrays(rng, n, max_size)
        ds.append(d)
        oms.append(omega)
        szs.append(sizes)
    return build_segment(ds, oms, szs)


def naive_ssim(x: np.ndarray, y: np.ndarray, window: int = 8) -> float:
    """Reference windowed SSIM: explicit per-window loops, no integral images."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    vals = []
    for r in range(x.shape[0] - window + 1):
        for c in range(x.shape[1] - window + 1):
            wx = x[r : r + window, c : c + window]
            wy = y[r : r + window, c : c + window]
            mx, my = wx.mean(), wy.mean()
            vx, vy = wx.var(), wy.var()
            cov = ((wx - mx) * (wy - my)).mean()
            vals.append(
                ((2 * mx * my + c1) * (2 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(vals))


