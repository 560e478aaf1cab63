"""Viewpoint predictor interface, baseline predictor, and evaluation.

Trajectories are 5 Hz timestamped unit vectors. Predictions carry one
(viewpoint, probability) entry per future sample. Prediction files are the
transport from external predictor implementations: blank-line-separated
blocks of ``t_ms yaw_deg pitch_deg probability`` records, one block per
prediction window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .viewport import Viewpoint, great_circle_distance

SAMPLE_INTERVAL_MS = 200  # 5 samples per second


class PredictionFormatError(ValueError):
    """Malformed prediction or trajectory file."""


@dataclass(frozen=True)
class TrajectoryPoint:
    t_ms: int
    point: Viewpoint


@dataclass(frozen=True)
class Trajectory:
    """Timestamped gaze samples; timestamps strictly increasing."""

    points: tuple[TrajectoryPoint, ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("trajectory must be non-empty")
        for a, b in zip(self.points, self.points[1:]):
            if b.t_ms <= a.t_ms:
                raise ValueError("trajectory timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def start_ms(self) -> int:
        return self.points[0].t_ms

    @property
    def end_ms(self) -> int:
        return self.points[-1].t_ms

    def at(self, t_ms: int) -> Viewpoint:
        """Sample at or immediately before ``t_ms``."""
        if t_ms < self.start_ms:
            raise ValueError(f"time {t_ms} precedes trajectory start {self.start_ms}")
        best = self.points[0]
        for p in self.points:
            if p.t_ms <= t_ms:
                best = p
            else:
                break
        return best.point

    def up_to(self, t_ms: int) -> "Trajectory":
        pts = tuple(p for p in self.points if p.t_ms <= t_ms)
        if not pts:
            raise ValueError(f"no trajectory samples at or before {t_ms}")
        return Trajectory(pts)


@dataclass(frozen=True)
class PredictionEntry:
    t_ms: int
    point: Viewpoint
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 < self.probability <= 1.0:
            raise ValueError(
                f"prediction probability must lie in (0, 1], got {self.probability}"
            )


@dataclass(frozen=True)
class Prediction:
    """Predicted future samples for one anchor instant."""

    entries: tuple[PredictionEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("prediction must contain at least one entry")
        for a, b in zip(self.entries, self.entries[1:]):
            if b.t_ms <= a.t_ms:
                raise ValueError("prediction timestamps must be strictly increasing")

    @property
    def anchor_ms(self) -> int:
        """The present instant the prediction was made at."""
        return self.entries[0].t_ms - SAMPLE_INTERVAL_MS

    @property
    def horizon_seconds(self) -> float:
        return len(self.entries) * SAMPLE_INTERVAL_MS / 1000.0

    def representative(self) -> PredictionEntry:
        """Median-horizon entry, used when one viewpoint must stand for the window."""
        return self.entries[(len(self.entries) - 1) // 2]


def last_position_predict(
    history: Trajectory, horizon_seconds: float, probability: float = 1.0
) -> Prediction:
    """Baseline: repeat the last observed position across the horizon."""
    steps = int(round(horizon_seconds * 1000.0 / SAMPLE_INTERVAL_MS))
    if steps <= 0:
        raise ValueError(f"horizon {horizon_seconds} s yields no prediction steps")
    last = history.points[-1]
    entries = tuple(
        PredictionEntry(last.t_ms + (k + 1) * SAMPLE_INTERVAL_MS, last.point, probability)
        for k in range(steps)
    )
    return Prediction(entries)


# --------------------------------------------------------------------------
# File formats
# --------------------------------------------------------------------------


def save_predictions(predictions: Sequence[Prediction], path) -> None:
    blocks = []
    for pred in predictions:
        blocks.append(
            "\n".join(
                f"{e.t_ms} {e.point.yaw_deg!r} {e.point.pitch_deg!r} {e.probability!r}"
                for e in pred.entries
            )
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n\n".join(blocks))
        if blocks:
            fh.write("\n")


def load_predictions(path) -> list[Prediction]:
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.readlines()
    preds: list[Prediction] = []
    entries: list[PredictionEntry] = []

    def flush() -> None:
        if entries:
            preds.append(Prediction(tuple(entries)))
            entries.clear()

    for no, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            flush()
            continue
        fields = body.split()
        if len(fields) != 4:
            raise PredictionFormatError(
                f"{path}:{no}: expected 't_ms yaw pitch probability', got {body!r}"
            )
        try:
            t_ms = int(fields[0])
            yaw, pitch, prob = (float(f) for f in fields[1:])
        except ValueError as exc:
            raise PredictionFormatError(f"{path}:{no}: non-numeric field in {body!r}") from exc
        try:
            entries.append(PredictionEntry(t_ms, Viewpoint.from_angles(yaw, pitch), prob))
        except ValueError as exc:
            raise PredictionFormatError(f"{path}:{no}: {exc}") from exc
    flush()
    return preds


def save_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for p in traj.points:
            fh.write(f"{p.t_ms} {p.point.x!r} {p.point.y!r} {p.point.z!r}\n")


def load_trajectory(path) -> Trajectory:
    points = []
    with open(path, "r", encoding="ascii") as fh:
        for no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            fields = body.split()
            if len(fields) != 4:
                raise PredictionFormatError(
                    f"{path}:{no}: expected 't_ms x y z', got {body!r}"
                )
            try:
                t_ms = int(fields[0])
                vec = [float(f) for f in fields[1:]]
            except ValueError as exc:
                raise PredictionFormatError(f"{path}:{no}: non-numeric field") from exc
            nrm = float(np.linalg.norm(vec))
            if abs(nrm - 1.0) > 1e-6:
                raise PredictionFormatError(f"{path}:{no}: |v|={nrm!r} is not unit length")
            points.append(TrajectoryPoint(t_ms, Viewpoint.from_vector(vec)))
    if not points:
        raise PredictionFormatError(f"{path}: empty trajectory file")
    return Trajectory(tuple(points))


# --------------------------------------------------------------------------
# Predictors (the interface the simulator consumes)
# --------------------------------------------------------------------------


class LastPositionPredictor:
    """Repeats the latest ground-truth sample; confidence is configurable."""

    def __init__(self, probability: float = 1.0):
        self.probability = probability

    def predict(self, history: Trajectory, anchor_ms: int, horizon_seconds: float) -> Prediction:
        return last_position_predict(
            history.up_to(anchor_ms), horizon_seconds, self.probability
        )


class GroundTruthPredictor:
    """Oracle that emits the true future trajectory with a fixed probability."""

    def __init__(self, truth: Trajectory, probability: float = 1.0):
        self.truth = truth
        self.probability = probability

    def predict(self, history: Trajectory, anchor_ms: int, horizon_seconds: float) -> Prediction:
        steps = int(round(horizon_seconds * 1000.0 / SAMPLE_INTERVAL_MS))
        entries = tuple(
            PredictionEntry(
                anchor_ms + (k + 1) * SAMPLE_INTERVAL_MS,
                self.truth.at(min(anchor_ms + (k + 1) * SAMPLE_INTERVAL_MS, self.truth.end_ms)),
                self.probability,
            )
            for k in range(steps)
        )
        return Prediction(entries)


class FilePredictor:
    """Serves predictions previously exported to the prediction file format."""

    def __init__(self, predictions: Sequence[Prediction]):
        if not predictions:
            raise ValueError("no predictions supplied")
        self._preds = sorted(predictions, key=lambda p: p.anchor_ms)

    @classmethod
    def from_file(cls, path) -> "FilePredictor":
        return cls(load_predictions(path))

    def predict(self, history: Trajectory, anchor_ms: int, horizon_seconds: float) -> Prediction:
        chosen = None
        for p in self._preds:
            if p.anchor_ms <= anchor_ms:
                chosen = p
            else:
                break
        if chosen is None:
            raise ValueError(
                f"no prediction anchored at or before t={anchor_ms} ms "
                f"(first anchor is {self._preds[0].anchor_ms} ms)"
            )
        return chosen


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def roll_predictor(
    predictor, truth: Trajectory, horizon_seconds: float, *, min_history: int = 1
) -> list[Prediction]:
    """Run a predictor at every anchor along a ground-truth trajectory."""
    preds = []
    steps = int(round(horizon_seconds * 1000.0 / SAMPLE_INTERVAL_MS))
    for idx in range(min_history - 1, len(truth.points) - steps):
        anchor = truth.points[idx].t_ms
        preds.append(predictor.predict(truth, anchor, horizon_seconds))
    return preds


def evaluate_predictor(
    predictions: Sequence[Prediction],
    truth: Trajectory,
    horizons_seconds: Sequence[float] = (1.0, 2.0, 3.0, 4.0, 5.0),
) -> dict[float, float]:
    """Mean great-circle error per horizon over all prediction windows.

    Horizon h is scored at the sample 5*h steps past the anchor; windows
    whose horizon extends beyond either stream are skipped. Timestamps must
    line up exactly with ground-truth samples.
    """
    truth_by_t = {p.t_ms: p.point for p in truth.points}
    out: dict[float, float] = {}
    for h in horizons_seconds:
        steps = int(round(h * 1000.0 / SAMPLE_INTERVAL_MS))
        errs = []
        for pred in predictions:
            if len(pred.entries) < steps:
                continue
            entry = pred.entries[steps - 1]
            if entry.t_ms > truth.end_ms:
                continue
            if entry.t_ms not in truth_by_t:
                raise ValueError(
                    f"prediction sample at t={entry.t_ms} ms has no aligned "
                    "ground-truth sample"
                )
            errs.append(great_circle_distance(entry.point, truth_by_t[entry.t_ms]))
        out[h] = float(np.mean(errs)) if errs else float("nan")
    return out


# --------------------------------------------------------------------------
# Synthetic trajectories (corpus plumbing)
# --------------------------------------------------------------------------


def make_smooth_trajectory(
    seed: int,
    duration_seconds: float,
    *,
    start_ms: int = 0,
    max_yaw_rate_deg_s: float = 40.0,
    max_pitch_deg: float = 35.0,
) -> Trajectory:
    """Seeded smooth gaze path: steady yaw drift plus a slow pitch sway."""
    rng = np.random.default_rng(seed)
    count = max(1, int(round(duration_seconds * 1000.0 / SAMPLE_INTERVAL_MS)) + 1)
    yaw0 = rng.uniform(-180.0, 180.0)
    yaw_rate = rng.uniform(-max_yaw_rate_deg_s, max_yaw_rate_deg_s)
    pitch0 = rng.uniform(-max_pitch_deg / 2.0, max_pitch_deg / 2.0)
    pitch_amp = rng.uniform(0.0, max_pitch_deg / 2.0)
    pitch_period = rng.uniform(4.0, 12.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    points = []
    for k in range(count):
        t = k * SAMPLE_INTERVAL_MS / 1000.0
        yaw = yaw0 + yaw_rate * t
        pitch = pitch0 + pitch_amp * np.sin(2.0 * np.pi * t / pitch_period + phase)
        pitch = float(np.clip(pitch, -89.0, 89.0))
        points.append(
            TrajectoryPoint(start_ms + k * SAMPLE_INTERVAL_MS, Viewpoint.from_angles(yaw, pitch))
        )
    return Trajectory(tuple(points))


def static_trajectory(
    view: Viewpoint, duration_seconds: float, *, start_ms: int = 0
) -> Trajectory:
    count = max(1, int(round(duration_seconds * 1000.0 / SAMPLE_INTERVAL_MS)) + 1)
    return Trajectory(
        tuple(TrajectoryPoint(start_ms + k * SAMPLE_INTERVAL_MS, view) for k in range(count))
    )
