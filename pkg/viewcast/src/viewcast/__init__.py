"""Toy multimodal spatial-temporal attention transformer for gaze prediction.

Predicts future viewpoint classes (K-means centroids of gaze directions)
with per-step probabilities, and exports them in the line-oriented
prediction format the packet scheduler consumes.
"""

from .data import (
    FRAME_SIZE,
    SAMPLE_INTERVAL_MS,
    GazeTrack,
    WindowDataset,
    build_windows,
    render_frames,
    smooth_track,
)
from .export import export_predictions, predict_track
from .geometry import angles_to_vec, great_circle, vec_to_angles
from .kmeans import CentroidVocabulary, fit_centroids
from .model import Attention, Block, ModelConfig, ViewpointTransformer
from .train import DivergenceError, TrainResult, load_checkpoint, save_checkpoint, train_toy

__version__ = "0.1.0"
