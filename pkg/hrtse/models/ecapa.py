"""ECAPA-TDNN speaker embedder producing the global speaker feature.

Feature maps follow the Conv1d convention ``[B, C, T]``; the public
:meth:`Ecapa.forward` takes FBank features ``[B, T, n_mels]``.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from hrtse.config import EcapaConfig, FbankConfig, StftConfig
from hrtse.errors import ShapeError
from hrtse.frontend import DEFAULT_FBANK, DEFAULT_STFT, fbank


class TdnnBlock(nn.Module):
    """Dilated Conv1d with "same" padding, ReLU and batch norm."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 1, dilation: int = 1):
        super().__init__()
        self.conv1d = nn.Conv1d(
            in_channels,
            out_channels,
            kernel_size,
            dilation=dilation,
            padding=dilation * (kernel_size - 1) // 2,
        )
        self.activation = nn.ReLU()
        self.batch_norm = nn.BatchNorm1d(out_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.batch_norm(self.activation(self.conv1d(x)))


class Res2NetBlock(nn.Module):
    """Split channels into ``scale`` groups; group ``i`` sees group ``i-1``'s output."""

    def __init__(self, channels: int, kernel_size: int, dilation: int, scale: int):
        super().__init__()
        if channels % scale:
            raise ShapeError(f"{channels} channels do not split into {scale} groups")
        self.scale = scale
        self.width = channels // scale
        self.blocks = nn.ModuleList(
            [TdnnBlock(self.width, self.width, kernel_size, dilation) for _ in range(scale - 1)]
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        chunks = torch.split(x, self.width, dim=1)
        outputs = [chunks[0]]
        y = None
        for i, block in enumerate(self.blocks, start=1):
            y = block(chunks[i] if y is None else chunks[i] + y)
            outputs.append(y)
        return torch.cat(outputs, dim=1)


class SqueezeExcitation(nn.Module):
    def __init__(self, channels: int, bottleneck: int):
        super().__init__()
        self.conv1x1_1 = nn.Conv1d(channels, bottleneck, 1)
        self.activation = nn.ReLU()
        self.conv1x1_2 = nn.Conv1d(bottleneck, channels, 1)
        self.sigmoid = nn.Sigmoid()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        w = x.mean(dim=2, keepdim=True)
        w = self.sigmoid(self.conv1x1_2(self.activation(self.conv1x1_1(w))))
        return x * w


class SeRes2NetBlock(nn.Module):
    """TDNN -> Res2Net -> TDNN -> squeeze-excitation, with an optional residual path."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        dilation: int,
        scale: int,
        se_bottleneck: int,
        residual: bool = True,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.residual = residual
        self.tdnn1 = TdnnBlock(in_channels, out_channels, 1)
        self.res2net = Res2NetBlock(out_channels, kernel_size, dilation, scale)
        self.tdnn2 = TdnnBlock(out_channels, out_channels, 1)
        self.se = SqueezeExcitation(out_channels, se_bottleneck)
        if residual and in_channels != out_channels:
            raise ShapeError("a residual SE-Res2Net block needs equal input and output channels")

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ShapeError(f"SE-Res2Net block expects {self.in_channels} channels, got {x.shape[1]}")
        out = self.se(self.tdnn2(self.res2net(self.tdnn1(x))))
        return out + x if self.residual else out


def weighted_statistics(x: torch.Tensor, weights: torch.Tensor, eps: float = 1e-8) -> torch.Tensor:
    """Weighted mean and standard deviation over time, concatenated to ``[B, 2C]``.

    ``weights`` is ``[B, C, T]`` (or broadcastable) and sums to 1 over ``T``.
    """
    mean = (x * weights).sum(dim=2)
    var = ((x - mean.unsqueeze(2)) ** 2 * weights).sum(dim=2)
    std = torch.sqrt(var.clamp(min=eps))
    return torch.cat([mean, std], dim=1)


class AttentiveStatPool(nn.Module):
    """Channel-dependent attentive statistics pooling with global context."""

    def __init__(self, channels: int, attention_bottleneck: int, eps: float = 1e-8):
        super().__init__()
        self.eps = eps
        self.tdnn = TdnnBlock(channels * 3, attention_bottleneck, 1)
        self.tanh = nn.Tanh()
        self.conv = nn.Conv1d(attention_bottleneck, channels, 1)

    def attention(self, x: torch.Tensor) -> torch.Tensor:
        """Softmax weights ``[B, C, T]``, nonnegative and summing to 1 over time."""
        if x.shape[-1] < 1:
            raise ShapeError("attentive pooling needs at least one frame")
        t = x.shape[-1]
        uniform = torch.full_like(x, 1.0 / t)
        stats = weighted_statistics(x, uniform, self.eps)
        mean, std = stats.chunk(2, dim=1)
        context = torch.cat([x, mean.unsqueeze(2).expand(-1, -1, t), std.unsqueeze(2).expand(-1, -1, t)], dim=1)
        return F.softmax(self.conv(self.tanh(self.tdnn(context))), dim=2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return weighted_statistics(x, self.attention(x), self.eps)


class Ecapa(nn.Module):
    """ECAPA-TDNN: input block, dilated SE-Res2Net blocks, multi-layer aggregation, pooling.

    Args:
        cfg: Channel, kernel and dilation layout.
    """

    def __init__(self, cfg: EcapaConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.block_channels
        blocks = [
            SeRes2NetBlock(
                cfg.input_dim if i == 0 else c,
                c,
                kernel,
                dilation,
                cfg.res2net_scale,
                cfg.bottleneck,
                residual=i > 0,
            )
            for i, (kernel, dilation) in enumerate(zip(cfg.block_kernels, cfg.block_dilations, strict=True))
        ]
        self.blocks = nn.ModuleList(blocks)
        cat_channels = c * (len(blocks) - 1)
        self.mfa = TdnnBlock(cat_channels, cat_channels, 1)
        self.pool = AttentiveStatPool(cat_channels, cfg.attention_bottleneck, cfg.eps)
        self.fc = nn.Conv1d(2 * cat_channels, cfg.embedding_dim, 1)

    def frame_features(self, feats: torch.Tensor) -> torch.Tensor:
        """Aggregated frame-level features ``[B, (n_blocks - 1) * C, T]``."""
        if feats.shape[-1] != self.cfg.input_dim:
            raise ShapeError(f"embedder expects {self.cfg.input_dim} FBank channels, got {feats.shape[-1]}")
        x = feats.transpose(1, 2)
        outputs = []
        for block in self.blocks:
            x = block(x)
            outputs.append(x)
        return self.mfa(torch.cat(outputs[1:], dim=1))

    def forward(self, feats: torch.Tensor) -> torch.Tensor:
        """Embed FBank features ``[B, T, n_mels]`` into ``[B, embedding_dim]``."""
        pooled = self.pool(self.frame_features(feats))
        return self.fc(pooled.unsqueeze(2)).squeeze(2)

    @torch.no_grad()
    def embed(
        self,
        wave: torch.Tensor,
        stft_cfg: StftConfig = DEFAULT_STFT,
        fbank_cfg: FbankConfig = DEFAULT_FBANK,
    ) -> torch.Tensor:
        """Embedding of waveforms ``[B, N]`` in eval mode."""
        was_training = self.training
        self.eval()
        try:
            return self(fbank(wave, stft_cfg, fbank_cfg))
        finally:
            self.train(was_training)


def freeze(model: nn.Module) -> nn.Module:
    """Put ``model`` in eval mode and stop gradients to its parameters."""
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model
