"""Synthetic smooth-gaze corpus: trajectories, low-res frames, and windows.

Gaze paths drift in yaw at a steady rate with a slow pitch sway; each video
frame is a 16x16 grayscale image with a bright blob at the gaze's
equirectangular position, so the visual stream genuinely carries a
viewpoint signal for the visual encoder to exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import angles_to_vec

SAMPLE_INTERVAL_MS = 200  # 5 samples per second
FRAME_SIZE = 16


@dataclass(frozen=True)
class GazeTrack:
    """Timestamped unit gaze vectors at 5 Hz with matching frames."""

    t_ms: np.ndarray  # (N,)
    points: np.ndarray  # (N, 3)
    frames: np.ndarray  # (N, FRAME_SIZE, FRAME_SIZE) in [0, 1]

    def __len__(self) -> int:
        return int(self.t_ms.shape[0])


def smooth_track(seed: int, duration_seconds: float) -> GazeTrack:
    rng = np.random.default_rng(seed)
    count = int(round(duration_seconds * 1000 / SAMPLE_INTERVAL_MS)) + 1
    t = np.arange(count) * SAMPLE_INTERVAL_MS / 1000.0
    yaw0 = rng.uniform(-180.0, 180.0)
    yaw_rate = rng.uniform(15.0, 45.0) * rng.choice((-1.0, 1.0))
    pitch0 = rng.uniform(-15.0, 15.0)
    pitch_amp = rng.uniform(5.0, 20.0)
    period = rng.uniform(6.0, 14.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    yaw = yaw0 + yaw_rate * t
    pitch = np.clip(pitch0 + pitch_amp * np.sin(2 * np.pi * t / period + phase), -60, 60)
    points = angles_to_vec(yaw, pitch)
    frames = render_frames(yaw, pitch)
    return GazeTrack((np.arange(count) * SAMPLE_INTERVAL_MS).astype(np.int64), points, frames)


def render_frames(yaw_deg: np.ndarray, pitch_deg: np.ndarray) -> np.ndarray:
    """Equirectangular thumbnails with a Gaussian blob at the gaze point."""
    yaw = np.asarray(yaw_deg, dtype=np.float64)
    pitch = np.asarray(pitch_deg, dtype=np.float64)
    n = yaw.shape[0]
    ys, xs = np.mgrid[0:FRAME_SIZE, 0:FRAME_SIZE].astype(np.float64)
    cx = (np.mod(yaw + 180.0, 360.0) / 360.0) * FRAME_SIZE
    cy = ((90.0 - pitch) / 180.0) * FRAME_SIZE
    dx = np.minimum(
        np.abs(xs[None] - cx[:, None, None]),
        FRAME_SIZE - np.abs(xs[None] - cx[:, None, None]),
    )
    dy = ys[None] - cy[:, None, None]
    blob = np.exp(-(dx**2 + dy**2) / (2.0 * 1.8**2))
    return blob.reshape(n, FRAME_SIZE, FRAME_SIZE)


@dataclass(frozen=True)
class WindowDataset:
    """Supervised windows: history points + frames in, future class ids out."""

    history_ids: np.ndarray  # (M, A) centroid ids of the history gaze
    frames: np.ndarray  # (M, F, H, W)
    target_ids: np.ndarray  # (M, B)
    anchor_ms: np.ndarray  # (M,)
    history_len: int
    horizon: int

    def __len__(self) -> int:
        return int(self.history_ids.shape[0])


def build_windows(
    tracks: list[GazeTrack], vocab, history_len: int = 5, horizon: int = 10
) -> WindowDataset:
    hist_ids, frames, targets, anchors = [], [], [], []
    for track in tracks:
        ids = vocab.assign(track.points)
        last = len(track) - horizon
        for i in range(history_len - 1, last):
            lo = i - history_len + 1
            hist_ids.append(ids[lo : i + 1])
            frames.append(track.frames[lo : i + 1])
            targets.append(ids[i + 1 : i + 1 + horizon])
            anchors.append(track.t_ms[i])
    if not hist_ids:
        raise ValueError("tracks too short for the requested window shape")
    return WindowDataset(
        np.stack(hist_ids).astype(np.int64),
        np.stack(frames).astype(np.float32),
        np.stack(targets).astype(np.int64),
        np.asarray(anchors, dtype=np.int64),
        history_len,
        horizon,
    )
