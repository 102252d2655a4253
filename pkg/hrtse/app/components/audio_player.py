"""Audio player component with caching for encoded WAV bytes."""

from io import BytesIO

import numpy as np
import soundfile as sf
import streamlit as st
import torch

from hrtse.config import DEFAULT_SAMPLE_RATE


def wave_to_wav_bytes(wave: torch.Tensor | np.ndarray, sample_rate: int = DEFAULT_SAMPLE_RATE) -> bytes:
    """Encode a mono waveform as 16-bit PCM WAV bytes.

    Args:
        wave: Samples in [-1, 1]
        sample_rate: Sampling rate in Hz

    Returns:
        WAV file bytes
    """
    if isinstance(wave, torch.Tensor):
        wave = wave.detach().cpu().numpy()
    buffer = BytesIO()
    sf.write(buffer, np.clip(np.asarray(wave, dtype=np.float32), -1.0, 1.0), sample_rate, format="WAV", subtype="PCM_16")
    return buffer.getvalue()


@st.cache_data(ttl=3600, max_entries=200)
def load_wav_bytes(path: str) -> bytes | None:
    """Load and cache a WAV file's bytes.

    Args:
        path: Audio file path (used as cache key)

    Returns:
        File bytes or None if the file cannot be read
    """
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError:
        return None


def render_audio(label: str, wave: torch.Tensor | np.ndarray, sample_rate: int = DEFAULT_SAMPLE_RATE) -> None:
    """Render a labelled audio player for an in-memory waveform."""
    st.caption(label)
    st.audio(wave_to_wav_bytes(wave, sample_rate), format="audio/wav")


def render_audio_file(label: str, path: str) -> None:
    data = load_wav_bytes(path)
    st.caption(label)
    if data:
        st.audio(data, format="audio/wav")
    else:
        st.warning(f"Could not load {path}")
