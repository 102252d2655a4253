"""Attentive recurrent network (ARN): recurrent, self-attention and feedforward sub-blocks."""

from __future__ import annotations

import torch
import torch.nn as nn

from hrtse.config import ArnConfig
from hrtse.errors import ShapeError


class ArnBlock(nn.Module):
    """One ARN block over ``[B, L, D]`` sequences.

    Each sub-block (bidirectional LSTM, single/multi-head dot-product
    attention, x4 feedforward) is wrapped in a residual connection followed by
    layer normalisation. Non-causal: every step sees the whole sequence.
    """

    def __init__(self, dim: int, cfg: ArnConfig):
        super().__init__()
        directions = 2 if cfg.bidirectional else 1
        self.rnn = nn.LSTM(dim, cfg.hidden // directions, batch_first=True, bidirectional=cfg.bidirectional)
        self.rnn_proj = nn.Linear(cfg.hidden, dim)
        self.rnn_norm = nn.LayerNorm(dim)
        self.attention = nn.MultiheadAttention(dim, cfg.attention_heads, dropout=cfg.dropout, batch_first=True)
        self.attention_norm = nn.LayerNorm(dim)
        self.feedforward = nn.Sequential(
            nn.Linear(dim, dim * cfg.ff_mult),
            nn.GELU(),
            nn.Dropout(cfg.dropout),
            nn.Linear(dim * cfg.ff_mult, dim),
        )
        self.feedforward_norm = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        rnn_out, _ = self.rnn(x)
        x = self.rnn_norm(x + self.rnn_proj(rnn_out))
        attn_out, _ = self.attention(x, x, x, need_weights=False)
        x = self.attention_norm(x + attn_out)
        return self.feedforward_norm(x + self.feedforward(x))


class Arn(nn.Module):
    """Stack of ``cfg.blocks`` ARN blocks of width ``dim``."""

    def __init__(self, dim: int, cfg: ArnConfig):
        super().__init__()
        self.dim = dim
        self.blocks = nn.ModuleList([ArnBlock(dim, cfg) for _ in range(cfg.blocks)])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.dim:
            raise ShapeError(f"ARN expects width {self.dim}, got {x.shape[-1]}")
        for block in self.blocks:
            x = block(x)
        return x


class FrequencyArn(nn.Module):
    """ARN run along the frequency axis of every frame independently.

    Input and output are magnitudes ``[B, T, F]``; each frame's ``F`` bins form
    a length-``F`` sequence with feature size 1, lifted to ``cfg.hidden`` and
    mapped back to width 1 by a final linear layer.
    """

    def __init__(self, n_bins: int, cfg: ArnConfig):
        super().__init__()
        self.n_bins = n_bins
        self.lift = nn.Linear(1, cfg.hidden)
        self.arn = Arn(cfg.hidden, cfg)
        self.out = nn.Linear(cfg.hidden, 1)

    def forward(self, mag: torch.Tensor) -> torch.Tensor:
        if mag.shape[-1] != self.n_bins:
            raise ShapeError(f"frequency ARN expects {self.n_bins} bins, got {mag.shape[-1]}")
        b, t, f = mag.shape
        seq = mag.reshape(b * t, f, 1)
        out = self.out(self.arn(self.lift(seq)))
        return out.reshape(b, t, f)
