"""Shared fixtures; the trained toy model is built once per session."""

import numpy as np
import pytest

import viewcast as vc

TRAIN_SEEDS = range(8)
EVAL_SEEDS = range(100, 105)
K = 32


@pytest.fixture(scope="session")
def trained():
    tracks = [vc.smooth_track(s, 45.0) for s in TRAIN_SEEDS]
    vocab = vc.fit_centroids(np.concatenate([t.points for t in tracks]), K, seed=0)
    dataset = vc.build_windows(tracks, vocab, history_len=5, horizon=10)
    return vc.train_toy(dataset, vocab, epochs=20, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
