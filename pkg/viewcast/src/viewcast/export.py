"""Prediction export in the scheduler's interchange format.

Blank-line-separated blocks, one per prediction window, each line
``t_ms yaw_deg pitch_deg probability`` at 5 samples per second.
"""

from __future__ import annotations

import numpy as np
import torch

from .data import SAMPLE_INTERVAL_MS, GazeTrack
from .geometry import vec_to_angles
from .kmeans import CentroidVocabulary
from .model import ViewpointTransformer


def predict_track(
    model: ViewpointTransformer,
    vocab: CentroidVocabulary,
    track: GazeTrack,
    *,
    steps: int | None = None,
) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """(anchor_ms, predicted points (B,3), probabilities (B,)) per window."""
    cfg = model.config
    steps = steps or cfg.horizon
    if steps > cfg.horizon:
        raise ValueError(f"model horizon is {cfg.horizon} steps, requested {steps}")
    ids = vocab.assign(track.points)
    out = []
    hist = cfg.history_len
    for i in range(hist - 1, len(track)):
        lo = i - hist + 1
        frames = torch.from_numpy(track.frames[lo : i + 1][None]).float()
        history = torch.from_numpy(ids[lo : i + 1][None])
        pred_ids, probs = model.predict(frames, history, steps)
        out.append(
            (
                int(track.t_ms[i]),
                vocab.decode(pred_ids[0].numpy()),
                probs[0].numpy().astype(np.float64),
            )
        )
    return out


def export_predictions(
    model: ViewpointTransformer,
    vocab: CentroidVocabulary,
    track: GazeTrack,
    path,
    *,
    steps: int | None = None,
) -> None:
    """Write prediction blocks consumable by the scheduling side."""
    blocks = []
    for anchor_ms, points, probs in predict_track(model, vocab, track, steps=steps):
        yaw, pitch = vec_to_angles(points)
        lines = []
        for k in range(points.shape[0]):
            t = anchor_ms + (k + 1) * SAMPLE_INTERVAL_MS
            p = min(1.0, max(float(probs[k]), 1e-9))
            lines.append(f"{t} {float(yaw[k])!r} {float(pitch[k])!r} {p!r}")
        blocks.append("\n".join(lines))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n\n".join(blocks))
        if blocks:
            fh.write("\n")
