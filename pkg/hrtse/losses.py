"""Training objective: compressed RI and magnitude spectral losses plus negative SI-SNR."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from hrtse.config import LossConfig, StftConfig
from hrtse.errors import ShapeError
from hrtse.frontend import DEFAULT_STFT, compressed_spectrum, stft
from hrtse.metrics import si_snr

DEFAULT_LOSS = LossConfig()


@dataclass
class LossBreakdown:
    """Loss terms as scalar tensors; ``l_si_snr`` already carries the minus sign."""

    l_ri: torch.Tensor
    l_mag: torch.Tensor
    l_si_snr: torch.Tensor
    total: torch.Tensor

    def as_floats(self) -> dict[str, float]:
        return {
            "l_ri": float(self.l_ri.detach()),
            "l_mag": float(self.l_mag.detach()),
            "l_si_snr": float(self.l_si_snr.detach()),
            "total": float(self.total.detach()),
        }

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.total.detach()))


def _check_specs(ref_spec: torch.Tensor, est_spec: torch.Tensor) -> None:
    if ref_spec.shape != est_spec.shape:
        raise ShapeError(f"spectrogram shapes differ: {tuple(ref_spec.shape)} vs {tuple(est_spec.shape)}")


def _per_frame_sum(sq: torch.Tensor) -> torch.Tensor:
    # sum over (T, F), divide by T, mean over any batch dims
    frames = sq.shape[-2]
    return (sq.sum(dim=(-2, -1)) / frames).mean()


def loss_mag(ref_spec: torch.Tensor, est_spec: torch.Tensor, p: float = 0.5, eps: float = 1e-12) -> torch.Tensor:
    """``(1/T) sum_tf (|S|^p - |Ŝ|^p)^2``, averaged over the batch."""
    _check_specs(ref_spec, est_spec)
    ref_mag, _ = compressed_spectrum(ref_spec, p, eps)
    est_mag, _ = compressed_spectrum(est_spec, p, eps)
    return _per_frame_sum((ref_mag - est_mag) ** 2)


def loss_ri(ref_spec: torch.Tensor, est_spec: torch.Tensor, p: float = 0.5, eps: float = 1e-12) -> torch.Tensor:
    """``(1/T) sum_tf |S_c - Ŝ_c|^2`` between power-compressed complex spectra."""
    _check_specs(ref_spec, est_spec)
    _, ref_c = compressed_spectrum(ref_spec, p, eps)
    _, est_c = compressed_spectrum(est_spec, p, eps)
    diff = ref_c - est_c
    return _per_frame_sum(diff.real**2 + diff.imag**2)


def total_loss(
    est_wave: torch.Tensor,
    ref_wave: torch.Tensor,
    cfg: LossConfig = DEFAULT_LOSS,
    stft_cfg: StftConfig = DEFAULT_STFT,
) -> LossBreakdown:
    """Weighted sum ``L_RI + L_mag - SI-SNR`` of waveforms ``[..., N]``."""
    if est_wave.shape != ref_wave.shape:
        raise ShapeError(f"estimate {tuple(est_wave.shape)} and reference {tuple(ref_wave.shape)} differ")
    est_spec = stft(est_wave, stft_cfg)
    ref_spec = stft(ref_wave, stft_cfg)
    l_ri = loss_ri(ref_spec, est_spec, cfg.compress_p, cfg.eps)
    l_mag = loss_mag(ref_spec, est_spec, cfg.compress_p, cfg.eps)
    l_si_snr = -si_snr(est_wave, ref_wave, cfg.si_snr_cap_db).mean()
    total = cfg.weight_ri * l_ri + cfg.weight_mag * l_mag + cfg.weight_si_snr * l_si_snr
    return LossBreakdown(l_ri=l_ri, l_mag=l_mag, l_si_snr=l_si_snr, total=total)
