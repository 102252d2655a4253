"""End-to-end target speaker extraction: waveform in, waveform out."""

from __future__ import annotations

import torch
import torch.nn as nn

from hrtse.config import MODES, FbankConfig, ModelConfig, StftConfig
from hrtse.errors import ShapeError
from hrtse.frontend import DEFAULT_FBANK, DEFAULT_STFT, istft, stft
from hrtse.models.ecapa import Ecapa, freeze
from hrtse.models.separator import HrTseSeparator


class Extractor(nn.Module):
    """Frozen ECAPA embedder plus the jointly trained separator.

    Args:
        separator: Separator with its local feature net and fusion projection.
        embedder: Speaker embedder; frozen on construction.
        stft_cfg: Analysis/synthesis configuration.
        fbank_cfg: FBank configuration of the embedder.
        mode: Default fusion mode (``local``, ``global`` or ``hr``).
    """

    def __init__(
        self,
        separator: HrTseSeparator,
        embedder: Ecapa,
        stft_cfg: StftConfig = DEFAULT_STFT,
        fbank_cfg: FbankConfig = DEFAULT_FBANK,
        mode: str = "hr",
    ):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.separator = separator
        self.embedder = freeze(embedder)
        self.stft_cfg = stft_cfg
        self.fbank_cfg = fbank_cfg
        self.mode = mode

    @classmethod
    def from_config(
        cls,
        model_cfg: ModelConfig,
        embedder: Ecapa | None = None,
        stft_cfg: StftConfig = DEFAULT_STFT,
        fbank_cfg: FbankConfig = DEFAULT_FBANK,
        mode: str = "hr",
        compress_p: float = 0.5,
    ) -> Extractor:
        separator = HrTseSeparator(model_cfg.separator(), model_cfg.local(), compress_p)
        embedder = embedder if embedder is not None else Ecapa(model_cfg.embedder())
        return cls(separator, embedder, stft_cfg, fbank_cfg, mode)

    def train(self, mode: bool = True) -> Extractor:
        super().train(mode)
        self.embedder.eval()
        return self

    def trainable_parameters(self) -> list[nn.Parameter]:
        return [p for p in self.separator.parameters() if p.requires_grad]

    def embed_anchor(self, anchor: torch.Tensor) -> torch.Tensor:
        return self.embedder.embed(anchor, self.stft_cfg, self.fbank_cfg)

    def forward(self, mixture: torch.Tensor, anchor: torch.Tensor, mode: str | None = None) -> torch.Tensor:
        """Estimated target waveforms ``[B, N]`` for mixtures ``[B, N]`` and anchors ``[B, Na]``."""
        if mixture.dim() != 2 or anchor.dim() != 2 or mixture.shape[0] != anchor.shape[0]:
            raise ShapeError(f"expected [B, N] mixture and anchor, got {tuple(mixture.shape)} and {tuple(anchor.shape)}")
        mode = mode or self.mode
        mix_spec = stft(mixture, self.stft_cfg)
        anchor_spec = stft(anchor, self.stft_cfg)
        embedding = self.embed_anchor(anchor) if mode in ("global", "hr") else anchor.new_zeros(anchor.shape[0], 1)
        est_spec = self.separator(mix_spec, anchor_spec, embedding, mode)
        return istft(est_spec, self.stft_cfg, mixture.shape[-1])

    @torch.no_grad()
    def separate(self, mixture: torch.Tensor, anchor: torch.Tensor, mode: str | None = None) -> torch.Tensor:
        """Extract the anchor's speaker from ``mixture`` in eval mode.

        Accepts single waveforms ``[N]`` or batches ``[B, N]``; the output has
        the mixture's shape.
        """
        single = mixture.dim() == 1
        if single:
            mixture, anchor = mixture.unsqueeze(0), anchor.unsqueeze(0)
        was_training = self.training
        self.eval()
        try:
            est = self(mixture, anchor, mode)
        finally:
            self.train(was_training)
        return est[0] if single else est
