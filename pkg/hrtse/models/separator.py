"""CRN separation network with local and global speaker-feature fusion.

Layout (feature maps ``[B, C, T, F]``):

* encoder: ``len(encoder_channels)`` strided convs; before every layer but the
  first, the time-averaged local features of the matching level are broadcast
  over frames and concatenated on the channel axis;
* bottleneck: the last encoder output reshaped to ``[B, T, C*F]``, multiplied
  by the projected global embedding, then modelled by a non-causal ARN;
* decoder: transposed convs whose inputs concatenate the previous decoder
  output with the mirrored encoder output; the last layer emits the DeepFilter
  taps.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from hrtse.config import MODES, LocalNetConfig, SeparatorConfig, conv_freq_sizes
from hrtse.errors import ShapeError
from hrtse.models.arn import Arn
from hrtse.models.conv import CrnLayer
from hrtse.models.deep_filter import apply_deep_filter, coeffs_from_channels
from hrtse.models.local_net import AveragedLocalFeatures, LocalFeatureNet


@dataclass
class EncoderActivations:
    inputs: list[torch.Tensor]
    outputs: list[torch.Tensor]
    bottleneck: torch.Tensor

    @property
    def bottleneck_shape(self) -> tuple[int, int]:
        c, f = self.outputs[-1].shape[1], self.outputs[-1].shape[3]
        return c, f


def build_separator_input(mix_spec: torch.Tensor, input_channels: int = 4, p: float = 0.5) -> torch.Tensor:
    """Stack ``[|M|, Re M, Im M, |M|^p]`` (the last only for 4 channels) into ``[B, C, T, F]``."""
    if input_channels not in (3, 4):
        raise ShapeError(f"separator input has 3 or 4 channels, not {input_channels}")
    mag = mix_spec.abs()
    planes = [mag, mix_spec.real, mix_spec.imag]
    if input_channels == 4:
        planes.append(mag**p)
    return torch.stack(planes, dim=1)


def global_fusion(bottleneck: torch.Tensor, g: torch.Tensor) -> torch.Tensor:
    """Multiply every frame of ``[B, T, D]`` elementwise by ``g`` (``[B, D]`` or ``[D]``)."""
    if g.shape[-1] != bottleneck.shape[-1]:
        raise ShapeError(f"fusion vector width {g.shape[-1]} vs bottleneck width {bottleneck.shape[-1]}")
    return bottleneck * (g.unsqueeze(-2) if g.dim() > 1 else g)


class HrTseSeparator(nn.Module):
    """Separator, local feature net and fusion projection trained together.

    Args:
        cfg: Separator layout.
        local_cfg: Local feature net layout; its encoder channels must equal
            the first ``n - 1`` separator channels.
        compress_p: Exponent of the compressed-magnitude input channel.
    """

    def __init__(self, cfg: SeparatorConfig, local_cfg: LocalNetConfig, compress_p: float = 0.5):
        super().__init__()
        cfg.validate()
        local_cfg.validate()
        if tuple(local_cfg.encoder_channels) != tuple(cfg.encoder_channels[:-1]):
            raise ShapeError("local encoder channels must mirror the separator encoder")
        self.cfg = cfg
        self.compress_p = compress_p
        channels = list(cfg.encoder_channels)
        n = len(channels)
        self.freqs = [cfg.n_bins, *conv_freq_sizes(cfg.n_bins, n)]

        self.local_net = LocalFeatureNet(local_cfg)
        encoders = [CrnLayer(cfg.input_channels, channels[0])]
        encoders += [CrnLayer(2 * channels[k - 1], channels[k]) for k in range(1, n)]
        self.encoders = nn.ModuleList(encoders)

        self.projection = nn.Linear(cfg.embedding_dim, cfg.bottleneck_dim)
        self.arn = Arn(cfg.bottleneck_dim, cfg.arn)

        decoders = []
        for k in range(n - 1, -1, -1):
            out_f = self.freqs[k]
            natural = 2 * (self.freqs[k + 1] - 1) + 3
            last = k == 0
            decoders.append(
                CrnLayer(
                    2 * channels[k],
                    cfg.output_channels if last else channels[k - 1],
                    encoder=False,
                    output_layer=last,
                    output_padding=(0, out_f - natural),
                )
            )
        self.decoders = nn.ModuleList(decoders)

    def build_input(self, mix_spec: torch.Tensor) -> torch.Tensor:
        if mix_spec.shape[-1] != self.cfg.n_bins:
            raise ShapeError(f"mixture spectrogram has {mix_spec.shape[-1]} bins, expected {self.cfg.n_bins}")
        return build_separator_input(mix_spec, self.cfg.input_channels, self.compress_p)

    def neutral_local(self, batch: int, like: torch.Tensor) -> AveragedLocalFeatures:
        """Zero local features of the right shapes."""
        return AveragedLocalFeatures.zeros(batch, self.local_net.level_channels, self.local_net.level_freqs, like)

    def neutral_global(self, batch: int, like: torch.Tensor) -> torch.Tensor:
        return like.new_ones(batch, self.cfg.bottleneck_dim)

    def project_to_fusion(self, embedding: torch.Tensor) -> torch.Tensor:
        """Affine map of the speaker embedding to the bottleneck width."""
        return self.projection(embedding)

    def encoder_forward(self, x: torch.Tensor, local: AveragedLocalFeatures) -> EncoderActivations:
        if len(local.levels) < len(self.encoders):
            raise ShapeError(f"need {len(self.encoders)} local levels, got {len(local.levels)}")
        inputs, outputs = [], []
        for k, encoder in enumerate(self.encoders):
            if k > 0:
                feats = local.levels[k]
                if feats.shape[1:] != (x.shape[1], x.shape[3]):
                    raise ShapeError(
                        f"local level {k} is {tuple(feats.shape[1:])}, encoder layer {k + 1} "
                        f"expects {(x.shape[1], x.shape[3])}"
                    )
                x = torch.cat([x, feats.unsqueeze(2).expand(-1, -1, x.shape[2], -1)], dim=1)
            inputs.append(x)
            x = encoder(x)
            outputs.append(x)
        b, c, t, f = x.shape
        bottleneck = x.permute(0, 2, 1, 3).reshape(b, t, c * f)
        return EncoderActivations(inputs, outputs, bottleneck)

    def arn_sequence(self, seq: torch.Tensor) -> torch.Tensor:
        return self.arn(seq)

    def decoder_forward(self, arn_out: torch.Tensor, activations: EncoderActivations) -> torch.Tensor:
        """Decode the ARN output into complex DeepFilter taps ``[B, T, F, Lt, Lf]``."""
        if len(activations.outputs) != len(self.decoders):
            raise ShapeError(f"need {len(self.decoders)} skip activations, got {len(activations.outputs)}")
        c, f = activations.bottleneck_shape
        b, t, _ = arn_out.shape
        x = arn_out.reshape(b, t, c, f).permute(0, 2, 1, 3)
        for decoder, skip in zip(self.decoders, reversed(activations.outputs), strict=True):
            x = decoder(torch.cat([x, skip], dim=1))
        return coeffs_from_channels(x, tuple(self.cfg.deepfilter_taps))

    def extract(self, mix_spec: torch.Tensor, local: AveragedLocalFeatures, g: torch.Tensor) -> torch.Tensor:
        """Estimated target spectrogram given already computed speaker features."""
        activations = self.encoder_forward(self.build_input(mix_spec), local)
        fused = global_fusion(activations.bottleneck, g)
        coeffs = self.decoder_forward(self.arn_sequence(fused), activations)
        return apply_deep_filter(coeffs, mix_spec)

    def speaker_features(
        self,
        anchor_spec: torch.Tensor,
        embedding: torch.Tensor,
        mode: str = "hr",
    ) -> tuple[AveragedLocalFeatures, torch.Tensor]:
        """Local features and fusion vector for ``mode``; inactive paths are neutral."""
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        batch = anchor_spec.shape[0]
        like = anchor_spec.real
        local = self.local_net(anchor_spec) if mode in ("local", "hr") else self.neutral_local(batch, like)
        g = self.project_to_fusion(embedding) if mode in ("global", "hr") else self.neutral_global(batch, like)
        return local, g

    def forward(
        self,
        mix_spec: torch.Tensor,
        anchor_spec: torch.Tensor,
        embedding: torch.Tensor,
        mode: str = "hr",
    ) -> torch.Tensor:
        local, g = self.speaker_features(anchor_spec, embedding, mode)
        return self.extract(mix_spec, local, g)
