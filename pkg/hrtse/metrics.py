"""Evaluation metrics: SI-SNR, STOI/ESTOI, target speaker over-suppression, optional PESQ."""

from __future__ import annotations

import logging

import numpy as np
import torch
from pystoi import stoi as _pystoi

from hrtse.config import DEFAULT_SAMPLE_RATE, StftConfig, TsosConfig
from hrtse.errors import DomainError, ShapeError, TooShortError, UndefinedMetricError
from hrtse.frontend import DEFAULT_STFT

logger = logging.getLogger(__name__)

DEFAULT_SI_SNR_CAP_DB = 80.0
DEFAULT_TSOS = TsosConfig()


def _check_pair(est: torch.Tensor, ref: torch.Tensor) -> None:
    if est.shape != ref.shape:
        raise ShapeError(f"estimate {tuple(est.shape)} and reference {tuple(ref.shape)} differ")


def si_snr(est: torch.Tensor, ref: torch.Tensor, cap_db: float = DEFAULT_SI_SNR_CAP_DB) -> torch.Tensor:
    """Scale-invariant SNR in dB over the last axis.

    Both signals are made zero-mean, the estimate is projected on the
    reference and the ratio of projection to residual energy is taken. Values
    are clamped to ``[-cap_db, cap_db]``, so a perfect estimate scores
    ``cap_db``. Shared by the training loss and the reported metric.

    Args:
        est: Estimated waveform(s) ``[..., N]``.
        ref: Reference waveform(s), same shape.
        cap_db: Saturation value in dB.

    Returns:
        Tensor of shape ``[...]``
    """
    _check_pair(est, ref)
    est = est - est.mean(dim=-1, keepdim=True)
    ref = ref - ref.mean(dim=-1, keepdim=True)
    ref_energy = (ref**2).sum(dim=-1, keepdim=True)
    if bool((ref_energy == 0).any()):
        raise UndefinedMetricError("SI-SNR is undefined for an all-zero (or constant) reference")
    s_target = (est * ref).sum(dim=-1, keepdim=True) / ref_energy * ref
    e_noise = est - s_target
    tiny = torch.finfo(est.dtype).tiny
    target_energy = (s_target**2).sum(dim=-1).clamp(min=tiny)
    noise_energy = (e_noise**2).sum(dim=-1).clamp(min=tiny)
    return (10 * torch.log10(target_energy / noise_energy)).clamp(-cap_db, cap_db)


def si_snr_improvement(
    est: torch.Tensor, ref: torch.Tensor, mixture: torch.Tensor, cap_db: float = DEFAULT_SI_SNR_CAP_DB
) -> torch.Tensor:
    """SI-SNR of the estimate minus SI-SNR of the unprocessed mixture."""
    return si_snr(est, ref, cap_db) - si_snr(mixture, ref, cap_db)


def _as_numpy(x: torch.Tensor | np.ndarray) -> np.ndarray:
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().double().numpy()
    return np.asarray(x, dtype=np.float64)


def stoi(
    est: torch.Tensor | np.ndarray,
    ref: torch.Tensor | np.ndarray,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    extended: bool = False,
) -> float:
    """STOI (or ESTOI with ``extended=True``) of a single utterance.

    Resampling to 10 kHz, one-third octave analysis and silent-frame removal
    are done by ``pystoi``.
    """
    est_np, ref_np = _as_numpy(est), _as_numpy(ref)
    if est_np.shape != ref_np.shape or est_np.ndim != 1:
        raise ShapeError(f"STOI needs two equal-length 1-D signals, got {est_np.shape} and {ref_np.shape}")
    if len(ref_np) < sample_rate:
        raise TooShortError(f"STOI needs at least 1 s of audio, got {len(ref_np) / sample_rate:.3f} s")
    return float(_pystoi(ref_np, est_np, sample_rate, extended=extended))


def estoi(est: torch.Tensor | np.ndarray, ref: torch.Tensor | np.ndarray, sample_rate: int = DEFAULT_SAMPLE_RATE) -> float:
    return stoi(est, ref, sample_rate, extended=True)


def frame_energies_db(wave: torch.Tensor, stft_cfg: StftConfig = DEFAULT_STFT) -> torch.Tensor:
    """Per-frame energy in dB using the STFT window length and hop (no centring)."""
    win, hop = stft_cfg.win_length, stft_cfg.hop_length
    if wave.shape[-1] < win:
        wave = torch.nn.functional.pad(wave, (0, win - wave.shape[-1]))
    frames = wave.unfold(-1, win, hop)
    energy = (frames.double() ** 2).sum(dim=-1)
    return 10 * torch.log10(energy.clamp(min=torch.finfo(torch.float64).tiny))


def over_suppressed_frames(
    est: torch.Tensor,
    ref: torch.Tensor,
    cfg: TsosConfig = DEFAULT_TSOS,
    stft_cfg: StftConfig = DEFAULT_STFT,
) -> torch.Tensor:
    """Boolean mask of target-active frames where the estimate is suppressed."""
    _check_pair(est, ref)
    ref_db = frame_energies_db(ref, stft_cfg)
    est_db = frame_energies_db(est, stft_cfg)
    active = ref_db >= ref_db.max(dim=-1, keepdim=True).values - cfg.activity_floor_db
    return active & (est_db <= ref_db - cfg.suppression_db)


def tsos_flag(
    est: torch.Tensor,
    ref: torch.Tensor,
    cfg: TsosConfig = DEFAULT_TSOS,
    stft_cfg: StftConfig = DEFAULT_STFT,
) -> bool:
    """True when a single utterance has ``cfg.min_run`` consecutive over-suppressed active frames."""
    if est.dim() != 1:
        raise ShapeError("tsos_flag scores one utterance at a time")
    mask = over_suppressed_frames(est, ref, cfg, stft_cfg).tolist()
    run = 0
    for suppressed in mask:
        run = run + 1 if suppressed else 0
        if run >= cfg.min_run:
            return True
    return False


def tsos(
    est: torch.Tensor,
    ref: torch.Tensor,
    cfg: TsosConfig = DEFAULT_TSOS,
    stft_cfg: StftConfig = DEFAULT_STFT,
) -> float:
    """Over-suppression rate: fraction of flagged utterances in ``[B, N]`` (or one utterance ``[N]``)."""
    _check_pair(est, ref)
    if est.dim() == 1:
        return float(tsos_flag(est, ref, cfg, stft_cfg))
    flags = [tsos_flag(e, r, cfg, stft_cfg) for e, r in zip(est, ref, strict=True)]
    return float(np.mean(flags))


def pesq_available() -> bool:
    try:
        import pesq  # noqa: F401
    except ImportError:
        return False
    return True


def pesq_score(est: torch.Tensor, ref: torch.Tensor, sample_rate: int = DEFAULT_SAMPLE_RATE) -> float:
    """Wide-band PESQ through the ``pesq`` package (ITU-T P.862.2 reference code)."""
    try:
        from pesq import pesq
    except ImportError as e:
        raise DomainError("PESQ requested but the optional 'pesq' package is not installed") from e
    if sample_rate != DEFAULT_SAMPLE_RATE:
        raise DomainError("wide-band PESQ is only computed at 16 kHz here")
    return float(pesq(sample_rate, _as_numpy(ref), _as_numpy(est), "wb"))
