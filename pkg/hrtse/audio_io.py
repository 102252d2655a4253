"""Mono 16 kHz WAV reading and writing."""

from __future__ import annotations

import logging
from math import gcd
from pathlib import Path

import numpy as np
import soundfile as sf
import torch
from scipy.signal import resample_poly

from hrtse.artifacts import atomic_path
from hrtse.config import DEFAULT_SAMPLE_RATE
from hrtse.errors import ConfigMismatchError

logger = logging.getLogger(__name__)

SUBTYPES = {"pcm16": "PCM_16", "float": "FLOAT"}


def read_wav(path: str | Path, sample_rate: int = DEFAULT_SAMPLE_RATE, resample: bool = False) -> torch.Tensor:
    """Read a mono WAV file as a float32 tensor.

    Args:
        path: WAV file path
        sample_rate: Required sample rate
        resample: Resample other rates instead of rejecting them

    Returns:
        1-D float32 tensor of samples
    """
    data, sr = sf.read(str(path), dtype="float32", always_2d=True)
    if data.shape[1] != 1:
        raise ConfigMismatchError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    samples = data[:, 0]
    if sr != sample_rate:
        if not resample:
            raise ConfigMismatchError(f"{path}: sample rate {sr} Hz, expected {sample_rate} Hz")
        logger.debug("resampling %s from %d Hz to %d Hz", path, sr, sample_rate)
        g = gcd(sr, sample_rate)
        samples = resample_poly(samples, sample_rate // g, sr // g).astype(np.float32)
    return torch.from_numpy(np.ascontiguousarray(samples))


def write_wav(
    path: str | Path,
    wave: torch.Tensor | np.ndarray,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    subtype: str = "float",
) -> Path:
    """Atomically write a mono WAV file (``subtype`` is ``pcm16`` or ``float``)."""
    if subtype not in SUBTYPES:
        raise ValueError(f"subtype must be one of {sorted(SUBTYPES)}")
    path = Path(path)
    samples = wave.detach().cpu().numpy() if isinstance(wave, torch.Tensor) else np.asarray(wave)
    samples = samples.astype(np.float32).reshape(-1)
    if subtype == "pcm16":
        samples = np.clip(samples, -1.0, 1.0)
    with atomic_path(path) as tmp:
        sf.write(str(tmp), samples, sample_rate, subtype=SUBTYPES[subtype], format="WAV")
    return path
