"""Toy training loop and checkpointing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import WindowDataset
from .kmeans import CentroidVocabulary
from .model import ModelConfig, ViewpointTransformer


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


@dataclass
class TrainResult:
    model: ViewpointTransformer
    vocab: CentroidVocabulary
    epoch_losses: list[float]


def train_toy(
    dataset: WindowDataset,
    vocab: CentroidVocabulary,
    *,
    epochs: int = 20,
    batch_size: int = 50,
    lr: float = 5e-4,
    lr_decay: float = 0.99,
    seed: int = 0,
    config: ModelConfig | None = None,
) -> TrainResult:
    torch.manual_seed(seed)
    cfg = config or ModelConfig(
        vocab_size=vocab.size,
        history_len=dataset.history_len,
        frames_len=dataset.history_len,
        horizon=dataset.horizon,
    )
    model = ViewpointTransformer(cfg)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=lr_decay)
    loss_fn = nn.CrossEntropyLoss()

    frames = torch.from_numpy(dataset.frames)
    history = torch.from_numpy(dataset.history_ids)
    targets = torch.from_numpy(dataset.target_ids)
    order_rng = np.random.default_rng(seed)

    losses: list[float] = []
    model.train()
    for epoch in range(epochs):
        order = order_rng.permutation(len(dataset))
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(dataset), batch_size):
            idx = torch.from_numpy(order[start : start + batch_size])
            logits = model(frames[idx], history[idx], teacher_ids=targets[idx])
            loss = loss_fn(logits.reshape(-1, cfg.vocab_size), targets[idx].reshape(-1))
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {batches}: {loss.item()!r}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.item())
            batches += 1
        scheduler.step()
        losses.append(epoch_loss / batches)
    return TrainResult(model, vocab, losses)


def save_checkpoint(result: TrainResult, path) -> None:
    torch.save(
        {
            "config": vars(result.model.config),
            "state": result.model.state_dict(),
            "centroids": np.asarray(result.vocab.centroids),
            "epoch_losses": result.epoch_losses,
        },
        path,
    )


def load_checkpoint(path) -> TrainResult:
    blob = torch.load(path, weights_only=False)
    cfg = ModelConfig(**blob["config"])
    model = ViewpointTransformer(cfg)
    model.load_state_dict(blob["state"])
    model.eval()
    vocab = CentroidVocabulary(np.asarray(blob["centroids"]))
    return TrainResult(model, vocab, list(blob["epoch_losses"]))
