"""DeepFilter output stage: a small complex 2-D filter per time-frequency bin."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from hrtse.errors import ShapeError


def coeffs_from_channels(out: torch.Tensor, taps: tuple[int, int]) -> torch.Tensor:
    """Reinterpret decoder output ``[B, 2*Lt*Lf, T, F]`` as complex taps ``[B, T, F, Lt, Lf]``.

    The first ``Lt*Lf`` channels are the real parts, the rest the imaginary
    parts, both in row-major (time tap, frequency tap) order.
    """
    lt, lf = taps
    b, c, t, f = out.shape
    if c != 2 * lt * lf:
        raise ShapeError(f"{c} channels cannot hold {lt}x{lf} complex taps")
    parts = out.reshape(b, 2, lt, lf, t, f).permute(0, 1, 4, 5, 2, 3)
    return torch.complex(parts[:, 0].contiguous(), parts[:, 1].contiguous())


def identity_coeffs(frames: int, bins: int, taps: tuple[int, int], batch: int = 1, dtype=torch.complex64) -> torch.Tensor:
    """Taps with ``1+0j`` at the centre and zeros elsewhere."""
    lt, lf = taps
    coeffs = torch.zeros(batch, frames, bins, lt, lf, dtype=dtype)
    coeffs[..., lt // 2, lf // 2] = 1
    return coeffs


def apply_deep_filter(coeffs: torch.Tensor, spec: torch.Tensor) -> torch.Tensor:
    """Filter ``spec`` ``[..., T, F]`` with per-bin taps ``[..., T, F, Lt, Lf]``.

    ``out[t, f] = sum_ij H[t, f, i, j] * M[t + i - Lt//2, f + j - Lf//2]`` with
    zero padding outside the spectrogram.
    """
    lt, lf = coeffs.shape[-2:]
    if coeffs.shape[:-2] != spec.shape:
        raise ShapeError(f"filter taps {tuple(coeffs.shape)} do not match spectrogram {tuple(spec.shape)}")
    # [..., T, F, 2] -> [..., 2, T, F]
    planes = torch.view_as_real(spec).movedim(-1, -3)
    padded = F.pad(planes, (lf // 2, lf - 1 - lf // 2, lt // 2, lt - 1 - lt // 2))
    # [..., 2, T, F, Lt, Lf]
    patches = padded.unfold(-2, lt, 1).unfold(-2, lf, 1)
    m_re, m_im = patches.unbind(-5)
    h_re, h_im = coeffs.real, coeffs.imag
    out_re = (h_re * m_re - h_im * m_im).sum(dim=(-2, -1))
    out_im = (h_re * m_im + h_im * m_re).sum(dim=(-2, -1))
    return torch.complex(out_re, out_im)
