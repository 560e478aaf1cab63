"""Windowed structural similarity (SSIM) over grayscale frames.

Distortion between two frames is ``1 - SSIM`` clamped at zero. The window is
an 8x8 uniform sliding window with the usual stabilizers (K1=0.01, K2=0.03)
over an 8-bit dynamic range; these parameters are fixed so distortion tables
are reproducible bit-for-bit.
"""

from __future__ import annotations

import numpy as np

WINDOW = 8
K1 = 0.01
K2 = 0.03
DYNAMIC_RANGE = 255.0


def _box_sums(img: np.ndarray, w: int) -> np.ndarray:
    """Sums of every w-by-w window (all valid placements), via integral image."""
    ii = np.zeros((img.shape[0] + 1, img.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(img, axis=0), axis=1, out=ii[1:, 1:])
    return ii[w:, w:] - ii[:-w, w:] - ii[w:, :-w] + ii[:-w, :-w]


def _check_frame(img: np.ndarray) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale frame, got shape {a.shape}")
    if a.size and (a.min() < 0.0 or a.max() > 255.0):
        raise ValueError("pixel values must lie in [0, 255]")
    return a


def ssim(x: np.ndarray, y: np.ndarray, *, window: int = WINDOW) -> float:
    """Mean SSIM of two equally sized grayscale frames."""
    a, b = _check_frame(x), _check_frame(y)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape) < window:
        raise ValueError(f"frames must be at least {window}x{window}")
    area = float(window * window)
    c1 = (K1 * DYNAMIC_RANGE) ** 2
    c2 = (K2 * DYNAMIC_RANGE) ** 2
    mx = _box_sums(a, window) / area
    my = _box_sums(b, window) / area
    # Biased (population) second moments per window.
    vx = _box_sums(a * a, window) / area - mx * mx
    vy = _box_sums(b * b, window) / area - my * my
    cov = _box_sums(a * b, window) / area - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def frame_distortion(x: np.ndarray, y: np.ndarray) -> float:
    """Distortion ``1 - SSIM``, clamped below at zero."""
    return max(0.0, 1.0 - ssim(x, y))
