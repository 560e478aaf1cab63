"""Multimodal spatial-temporal attention transformer for viewpoint classes.

A visual branch attends over patch tokens within each frame, then over
frame representations across time; a viewpoint branch attends over the
quantized gaze history. A causal decoder cross-attends to the concatenated
visual-then-viewpoint memory and emits one centroid class per future step.
Toy scale throughout: embedding width 64, 4 heads, 16x16 frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    heads: int = 4
    spatial_blocks: int = 2
    temporal_blocks: int = 1
    viewpoint_blocks: int = 1
    decoder_blocks: int = 2
    patch: int = 4
    frame_size: int = 16
    history_len: int = 5
    frames_len: int = 5
    horizon: int = 10

    @property
    def tokens_per_frame(self) -> int:
        return (self.frame_size // self.patch) ** 2


class Attention(nn.Module):
    """Scaled dot-product multi-head attention that exposes its weights."""

    def __init__(self, d_model: int, heads: int):
        super().__init__()
        if d_model % heads:
            raise ValueError("d_model must divide evenly across heads")
        self.heads = heads
        self.d_head = d_model // heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)

    def forward(self, query, keys, mask=None):
        """mask: optional (Lq, Lk) boolean, True where attention is allowed."""
        if query.shape[-2] == 0 or keys.shape[-2] == 0:
            raise ValueError("attention requires at least one query and one key")
        b, lq, _ = query.shape
        lk = keys.shape[1]
        q = self.q(query).view(b, lq, self.heads, self.d_head).transpose(1, 2)
        k = self.k(keys).view(b, lk, self.heads, self.d_head).transpose(1, 2)
        v = self.v(keys).view(b, lk, self.heads, self.d_head).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        if mask is not None:
            scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        mixed = (weights @ v).transpose(1, 2).reshape(b, lq, -1)
        return self.out(mixed), weights


class Block(nn.Module):
    """Pre-norm attention + feed-forward; optional cross-attention stage."""

    def __init__(self, d_model: int, heads: int, cross: bool = False):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = Attention(d_model, heads)
        self.cross = Attention(d_model, heads) if cross else None
        self.norm_cross = nn.LayerNorm(d_model) if cross else None
        self.norm2 = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(
            nn.Linear(d_model, 4 * d_model), nn.GELU(), nn.Linear(4 * d_model, d_model)
        )
        self.last_self_weights = None
        self.last_cross_weights = None

    def forward(self, x, memory=None, mask=None):
        h = self.norm1(x)
        attended, self.last_self_weights = self.attn(h, h, mask)
        x = x + attended
        if self.cross is not None:
            h = self.norm_cross(x)
            attended, self.last_cross_weights = self.cross(h, memory)
            x = x + attended
        return x + self.ff(self.norm2(x))


class ViewpointTransformer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        self.patch_embed = nn.Linear(c.patch * c.patch, c.d_model)
        self.patch_pos = nn.Parameter(torch.zeros(c.tokens_per_frame, c.d_model))
        self.frame_pos = nn.Parameter(torch.zeros(c.frames_len, c.d_model))
        self.spatial = nn.ModuleList(Block(c.d_model, c.heads) for _ in range(c.spatial_blocks))
        self.temporal = nn.ModuleList(Block(c.d_model, c.heads) for _ in range(c.temporal_blocks))
        self.vp_embed = nn.Embedding(c.vocab_size, c.d_model)
        self.vp_pos = nn.Parameter(torch.zeros(c.history_len, c.d_model))
        self.viewpoint = nn.ModuleList(Block(c.d_model, c.heads) for _ in range(c.viewpoint_blocks))
        self.bos = nn.Parameter(torch.zeros(1, 1, c.d_model))
        self.dec_embed = nn.Embedding(c.vocab_size, c.d_model)
        self.dec_pos = nn.Parameter(torch.zeros(c.horizon, c.d_model))
        self.decoder = nn.ModuleList(
            Block(c.d_model, c.heads, cross=True) for _ in range(c.decoder_blocks)
        )
        self.head = nn.Linear(c.d_model, c.vocab_size)
        for p in (self.patch_pos, self.frame_pos, self.vp_pos, self.dec_pos):
            nn.init.normal_(p, std=0.02)
        nn.init.normal_(self.bos, std=0.02)

    # ----------------------------------------------------------- encoders

    def patches(self, frames: torch.Tensor) -> torch.Tensor:
        """(B, F, H, W) -> (B, F, Z, patch*patch) raster-ordered patches."""
        c = self.config
        b, f, h, w = frames.shape
        side = c.frame_size // c.patch
        x = frames.view(b, f, side, c.patch, side, c.patch)
        x = x.permute(0, 1, 2, 4, 3, 5).reshape(b, f, side * side, c.patch * c.patch)
        return x

    def encode_visual(self, frames: torch.Tensor) -> torch.Tensor:
        """Spatial attention within each frame, temporal attention across frames."""
        c = self.config
        b, f = frames.shape[:2]
        tokens = self.patch_embed(self.patches(frames)) + self.patch_pos
        tokens = tokens.view(b * f, c.tokens_per_frame, c.d_model)
        for block in self.spatial:
            tokens = block(tokens)
        frame_repr = tokens.mean(dim=1).view(b, f, c.d_model) + self.frame_pos[:f]
        for block in self.temporal:
            frame_repr = block(frame_repr)
        return frame_repr

    def encode_viewpoints(self, ids: torch.Tensor) -> torch.Tensor:
        x = self.vp_embed(ids) + self.vp_pos[: ids.shape[1]]
        for block in self.viewpoint:
            x = block(x)
        return x

    def memory(self, frames: torch.Tensor, history_ids: torch.Tensor) -> torch.Tensor:
        """Encoder output: visual tokens then viewpoint tokens."""
        return torch.cat(
            [self.encode_visual(frames), self.encode_viewpoints(history_ids)], dim=1
        )

    # ------------------------------------------------------------ decoder

    def decode(self, memory: torch.Tensor, teacher_ids: torch.Tensor | None, steps: int):
        """Logits for ``steps`` future classes.

        With ``teacher_ids`` the decoder runs teacher-forced in one pass;
        otherwise it generates autoregressively (greedy argmax).
        """
        if steps <= 0:
            raise ValueError("horizon must be at least one step")
        b = memory.shape[0]
        if teacher_ids is not None:
            inputs = torch.cat(
                [
                    self.bos.expand(b, 1, -1),
                    self.dec_embed(teacher_ids[:, : steps - 1]),
                ],
                dim=1,
            )
            return self._decoder_pass(inputs, memory)
        generated: list[torch.Tensor] = []
        logits_steps = []
        for _ in range(steps):
            inputs = self.bos.expand(b, 1, -1)
            if generated:
                inputs = torch.cat(
                    [inputs, self.dec_embed(torch.stack(generated, dim=1))], dim=1
                )
            logits = self._decoder_pass(inputs, memory)
            logits_steps.append(logits[:, -1])
            generated.append(logits[:, -1].argmax(dim=-1))
        return torch.stack(logits_steps, dim=1)

    def _decoder_pass(self, inputs: torch.Tensor, memory: torch.Tensor) -> torch.Tensor:
        length = inputs.shape[1]
        x = inputs + self.dec_pos[:length]
        causal = torch.tril(torch.ones(length, length, dtype=torch.bool, device=x.device))
        for block in self.decoder:
            x = block(x, memory=memory, mask=causal)
        return self.head(x)

    def forward(self, frames, history_ids, teacher_ids=None, steps: int | None = None):
        steps = steps or (teacher_ids.shape[1] if teacher_ids is not None else self.config.horizon)
        return self.decode(self.memory(frames, history_ids), teacher_ids, steps)

    @torch.no_grad()
    def predict(self, frames, history_ids, steps: int):
        """Greedy rollout: per-step class ids and their softmax probability."""
        self.eval()
        logits = self.decode(self.memory(frames, history_ids), None, steps)
        probs = torch.softmax(logits, dim=-1)
        top = probs.max(dim=-1)
        return top.indices, top.values
