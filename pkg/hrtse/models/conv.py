"""Encoder/decoder blocks of the convolutional recurrent network (CRN)."""

from __future__ import annotations

import torch
import torch.nn as nn


class CrnLayer(nn.Module):
    """3x3 conv (or transposed conv) with (1, 2) stride, batch norm and PReLU.

    Feature maps are ``[B, C, T, F]``. Only the time axis is zero padded, so the
    encoder maps F to ``floor((F - 3) / 2) + 1`` and the decoder maps F to
    ``2 (F - 1) + 3 + output_padding``.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: tuple[int, int] = (3, 3),
        stride: tuple[int, int] = (1, 2),
        encoder: bool = True,
        output_layer: bool = False,
        output_padding: int | tuple[int, int] = 0,
    ):
        super().__init__()
        padding = (kernel_size[0] // 2, 0)
        if encoder:
            self.conv2d = nn.Conv2d(in_channels, out_channels, kernel_size, stride=stride, padding=padding)
        else:
            self.conv2d = nn.ConvTranspose2d(
                in_channels, out_channels, kernel_size, stride=stride, padding=padding, output_padding=output_padding
            )
        self.output_layer = output_layer
        if not output_layer:
            self.batchnorm = nn.BatchNorm2d(out_channels)
            self.activation = nn.PReLU(out_channels)

    @property
    def in_channels(self) -> int:
        return self.conv2d.in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.conv2d(x)
        if self.output_layer:
            return x
        return self.activation(self.batchnorm(x))
