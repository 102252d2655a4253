"""Local speaker features: frequency-axis ARN plus a 4-layer convolutional speaker encoder."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from hrtse.config import LocalNetConfig, conv_freq_sizes
from hrtse.errors import ShapeError
from hrtse.models.arn import FrequencyArn
from hrtse.models.conv import CrnLayer


@dataclass
class LocalFeatureStack:
    """Encoder input (level 0) and the four encoder outputs, each ``[B, C, T2, F]``."""

    levels: list[torch.Tensor]

    @property
    def frames(self) -> int:
        return self.levels[0].shape[-2]


@dataclass
class AveragedLocalFeatures:
    """Per-level features averaged over time, each ``[B, C, F]``."""

    levels: list[torch.Tensor]

    @classmethod
    def zeros(cls, batch: int, channels: list[int], freqs: list[int], like: torch.Tensor) -> AveragedLocalFeatures:
        return cls([like.new_zeros(batch, c, f) for c, f in zip(channels, freqs, strict=True)])


def time_average(stack: LocalFeatureStack) -> AveragedLocalFeatures:
    """Arithmetic mean over the time axis of every level."""
    if not stack.levels or stack.frames < 1:
        raise ShapeError("cannot average an empty local feature stack")
    return AveragedLocalFeatures([level.mean(dim=-2) for level in stack.levels])


class LocalFeatureNet(nn.Module):
    def __init__(self, cfg: LocalNetConfig):
        super().__init__()
        self.cfg = cfg
        self.arn = FrequencyArn(cfg.n_bins, cfg.arn)
        channels = [cfg.input_channels, *cfg.encoder_channels]
        self.encoders = nn.ModuleList([CrnLayer(channels[i], channels[i + 1]) for i in range(len(cfg.encoder_channels))])

    @property
    def level_channels(self) -> list[int]:
        return [self.cfg.input_channels, *self.cfg.encoder_channels]

    @property
    def level_freqs(self) -> list[int]:
        return [self.cfg.n_bins, *conv_freq_sizes(self.cfg.n_bins, len(self.cfg.encoder_channels))]

    def arn_frequency(self, anchor_mag: torch.Tensor) -> torch.Tensor:
        return self.arn(anchor_mag)

    def encode_local(
        self,
        anchor_mag: torch.Tensor,
        arn_out: torch.Tensor,
        anchor_spec: torch.Tensor | None = None,
    ) -> LocalFeatureStack:
        """Run the speaker encoder on ``concat(anchor magnitude, ARN output)``.

        With ``input_channels == 4`` the anchor's real and imaginary parts
        (from ``anchor_spec``) are appended as channels 3 and 4.
        """
        if anchor_mag.shape != arn_out.shape:
            raise ShapeError(f"anchor magnitude {tuple(anchor_mag.shape)} vs ARN output {tuple(arn_out.shape)}")
        planes = [anchor_mag, arn_out]
        if self.cfg.input_channels == 4:
            if anchor_spec is None or anchor_spec.shape != anchor_mag.shape:
                raise ShapeError("the 4-channel local encoder needs the anchor's complex spectrogram")
            planes += [anchor_spec.real, anchor_spec.imag]
        x = torch.stack(planes, dim=1)
        levels = [x]
        for encoder in self.encoders:
            x = encoder(x)
            levels.append(x)
        return LocalFeatureStack(levels)

    def forward(self, anchor_spec: torch.Tensor) -> AveragedLocalFeatures:
        """Averaged local features of an anchor spectrogram ``[B, T2, F]`` (complex)."""
        mag = anchor_spec.abs()
        stack = self.encode_local(mag, self.arn_frequency(mag), anchor_spec)
        return time_average(stack)
