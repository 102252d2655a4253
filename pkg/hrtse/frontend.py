"""STFT analysis/synthesis, spectral compression and log-mel FBank features.

Waveforms are real tensors ``[..., N]``; spectrograms are complex tensors
``[..., T, F]`` with ``F = dft_size // 2 + 1`` (161 at the default config).
"""

from __future__ import annotations

import functools

import torch
import torchaudio

from hrtse.config import FbankConfig, StftConfig
from hrtse.errors import ConfigMismatchError, DomainError, TooShortError

DEFAULT_STFT = StftConfig()
DEFAULT_FBANK = FbankConfig()


def _window(cfg: StftConfig, wave: torch.Tensor) -> torch.Tensor:
    return torch.hann_window(cfg.win_length, periodic=True, dtype=wave.dtype, device=wave.device)


def _check_length(wave: torch.Tensor, cfg: StftConfig) -> None:
    if wave.shape[-1] < cfg.win_length:
        raise TooShortError(f"waveform has {wave.shape[-1]} samples, need at least one window ({cfg.win_length})")


def num_frames(num_samples: int, cfg: StftConfig = DEFAULT_STFT) -> int:
    return 1 + num_samples // cfg.hop_length


def stft(wave: torch.Tensor, cfg: StftConfig = DEFAULT_STFT) -> torch.Tensor:
    """Complex STFT of ``wave`` (periodic Hann, centred frames).

    Args:
        wave: Real tensor ``[..., N]`` with ``N`` at least one window.
        cfg: STFT configuration.

    Returns:
        Complex tensor ``[..., T, n_bins]``
    """
    _check_length(wave, cfg)
    batch_shape = wave.shape[:-1]
    flat = wave.reshape(-1, wave.shape[-1])
    spec = torch.stft(
        flat,
        n_fft=cfg.dft_size,
        hop_length=cfg.hop_length,
        win_length=cfg.win_length,
        window=_window(cfg, flat),
        center=True,
        pad_mode="reflect",
        return_complex=True,
    )
    # [B, F, T] -> [..., T, F]
    return spec.transpose(-1, -2).reshape(*batch_shape, spec.shape[-1], spec.shape[-2])


def istft(spec: torch.Tensor, cfg: StftConfig = DEFAULT_STFT, out_len: int | None = None) -> torch.Tensor:
    """Overlap-add synthesis with synthesis-window normalisation.

    Args:
        spec: Complex tensor ``[..., T, n_bins]`` produced with ``cfg``.
        cfg: STFT configuration.
        out_len: Output length in samples; defaults to ``(T - 1) * hop``.

    Returns:
        Real tensor ``[..., out_len]``
    """
    if spec.shape[-1] != cfg.n_bins:
        raise ConfigMismatchError(f"spectrogram has {spec.shape[-1]} bins, config expects {cfg.n_bins}")
    frames = spec.shape[-2]
    if out_len is not None and out_len > frames * cfg.hop_length + cfg.win_length:
        raise ConfigMismatchError(f"out_len {out_len} exceeds what {frames} frames can synthesise")
    batch_shape = spec.shape[:-2]
    flat = spec.reshape(-1, frames, cfg.n_bins).transpose(-1, -2)
    window = torch.hann_window(cfg.win_length, periodic=True, dtype=flat.real.dtype, device=flat.device)
    wave = torch.istft(
        flat,
        n_fft=cfg.dft_size,
        hop_length=cfg.hop_length,
        win_length=cfg.win_length,
        window=window,
        center=True,
        length=out_len,
    )
    return wave.reshape(*batch_shape, wave.shape[-1])


def power_compress(spec: torch.Tensor, p: float) -> torch.Tensor:
    """Map every bin ``v`` to ``|v|^p · e^{jθ(v)}``; the phase of a zero bin is 0."""
    if not 0 < p <= 1:
        raise DomainError(f"compression factor must be in (0, 1], got {p}")
    if p == 1:
        return spec
    return torch.polar(spec.abs() ** p, torch.angle(spec))


def compressed_spectrum(spec: torch.Tensor, p: float, eps: float = 1e-12) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable compression used by the losses.

    Returns the compressed magnitude ``|v|^p`` and the compressed complex
    spectrum. ``eps`` goes under the square root so gradients stay finite at
    zero bins.
    """
    if not 0 < p <= 1:
        raise DomainError(f"compression factor must be in (0, 1], got {p}")
    mag = torch.sqrt(spec.real**2 + spec.imag**2 + eps)
    cmag = mag**p
    return cmag, spec * (cmag / mag)


@functools.lru_cache(maxsize=8)
def _mel_matrix(n_bins: int, sample_rate: int, n_mels: int, f_min: float, f_max: float) -> torch.Tensor:
    # [n_bins, n_mels]
    return torchaudio.functional.melscale_fbanks(
        n_freqs=n_bins,
        f_min=f_min,
        f_max=f_max,
        n_mels=n_mels,
        sample_rate=sample_rate,
        norm=None,
        mel_scale="htk",
    )


def mel_matrix(cfg: StftConfig = DEFAULT_STFT, fbank_cfg: FbankConfig = DEFAULT_FBANK) -> torch.Tensor:
    return _mel_matrix(cfg.n_bins, cfg.sample_rate_hz, fbank_cfg.n_mels, fbank_cfg.f_min_hz, fbank_cfg.f_max_hz)


def fbank(
    wave: torch.Tensor,
    cfg: StftConfig = DEFAULT_STFT,
    fbank_cfg: FbankConfig = DEFAULT_FBANK,
) -> torch.Tensor:
    """Log mel filter-bank energies ``[..., T, n_mels]`` with a hard energy floor."""
    spec = stft(wave, cfg)
    power = spec.real**2 + spec.imag**2
    mel = power @ mel_matrix(cfg, fbank_cfg).to(dtype=power.dtype, device=power.device)
    feats = torch.log(torch.clamp(mel, min=fbank_cfg.log_floor))
    if fbank_cfg.mean_norm:
        feats = feats - feats.mean(dim=-2, keepdim=True)
    return feats
