"""Deterministic synthetic two-talker corpus.

Each toy speaker is a parametric source-filter voice: a harmonic glottal source
around a speaker-specific fundamental frequency, shaped by a fixed set of
formant resonators and a spectral tilt. Utterances are syllable-like voiced
bursts separated by short pauses, so speaker identity is learnable and frames
of silence exist for over-suppression measurements.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter
from tqdm import tqdm

from hrtse.audio_io import write_wav
from hrtse.config import DEFAULT_SAMPLE_RATE, MANIFEST_NAME, CorpusConfig, to_dict
from hrtse.data.manifest import Manifest, MixtureSpec, UtteranceRecord
from hrtse.data.mixing import select_anchor
from hrtse.errors import ConfigError

logger = logging.getLogger(__name__)

TARGET_RMS = 0.05


@dataclass(frozen=True)
class SpeakerVoice:
    speaker_id: str
    f0_hz: float
    formants_hz: tuple[float, float, float]
    bandwidths_hz: tuple[float, float, float]
    tilt: float
    breathiness: float


def make_voice(index: int, n_speakers: int, seed: int) -> SpeakerVoice:
    rng = np.random.default_rng([seed, index, 0])
    # spread fundamentals log-uniformly over 90-260 Hz, interleaved so neighbours differ
    order = (index * 5) % n_speakers if n_speakers % 5 else index
    f0 = 90.0 * (260.0 / 90.0) ** (order / max(n_speakers - 1, 1))
    f0 *= float(rng.uniform(0.97, 1.03))
    formants = (
        float(rng.uniform(300, 900)),
        float(rng.uniform(1000, 2400)),
        float(rng.uniform(2500, 3600)),
    )
    bandwidths = tuple(float(b) for b in rng.uniform(60, 160, size=3))
    return SpeakerVoice(
        speaker_id=f"spk{index:02d}",
        f0_hz=f0,
        formants_hz=formants,
        bandwidths_hz=bandwidths,  # type: ignore[arg-type]
        tilt=float(rng.uniform(0.8, 1.6)),
        breathiness=float(rng.uniform(0.01, 0.08)),
    )


def _resonate(x: np.ndarray, freq: float, bandwidth: float, sr: int) -> np.ndarray:
    r = np.exp(-np.pi * bandwidth / sr)
    theta = 2 * np.pi * freq / sr
    return lfilter([1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r], x)


def _syllable_envelope(n: int, sr: int, rng: np.random.Generator) -> np.ndarray:
    env = np.zeros(n)
    pos = int(rng.uniform(0.02, 0.1) * sr)
    while pos < n:
        length = int(rng.uniform(0.12, 0.35) * sr)
        end = min(n, pos + length)
        seg = end - pos
        ramp = min(int(0.02 * sr), seg // 2)
        burst = np.ones(seg) * rng.uniform(0.6, 1.0)
        if ramp > 0:
            fade = 0.5 - 0.5 * np.cos(np.linspace(0, np.pi, ramp))
            burst[:ramp] *= fade
            burst[-ramp:] *= fade[::-1]
        env[pos:end] = burst
        pos = end + int(rng.uniform(0.03, 0.15) * sr)
    return env


def synthesize_utterance(voice: SpeakerVoice, duration_s: float, rng: np.random.Generator, sr: int) -> np.ndarray:
    """Render one utterance of ``voice`` as float64 samples."""
    n = int(round(duration_s * sr))
    t = np.arange(n) / sr
    env = _syllable_envelope(n, sr, rng)

    vibrato = 0.03 * np.sin(2 * np.pi * rng.uniform(3, 6) * t + rng.uniform(0, 2 * np.pi))
    drift = np.cumsum(rng.normal(0, 1, n)) / np.sqrt(n) * 0.05
    f0 = voice.f0_hz * (1.0 + vibrato + drift)
    phase = 2 * np.pi * np.cumsum(f0) / sr

    source = np.zeros(n)
    for k in range(1, 60):
        amp = np.where(k * f0 < 0.45 * sr, k ** (-voice.tilt), 0.0)
        source += amp * np.sin(k * phase)
    source += voice.breathiness * rng.normal(0, 1, n)

    scale = rng.uniform(0.96, 1.04)
    out = source
    for freq, bw in zip(voice.formants_hz, voice.bandwidths_hz, strict=True):
        out = _resonate(out, freq * scale, bw, sr)
    out = out * env

    active = env > 0.1
    rms = np.sqrt(np.mean(out[active] ** 2)) if active.any() else 1.0
    out = out * (TARGET_RMS / max(rms, 1e-12))
    return np.clip(out, -0.99, 0.99)


def _pair_mixtures(
    split: str,
    records: list[UtteranceRecord],
    anchor_pool: Manifest,
    cfg: CorpusConfig,
    rng: np.random.Generator,
) -> list[MixtureSpec]:
    mixtures = []
    for rep in range(cfg.mixtures_per_utterance):
        for target in records:
            others = [r for r in records if r.speaker_id != target.speaker_id]
            interferer = others[int(rng.integers(len(others)))]
            gain = float(rng.uniform(*cfg.gain_db_range))
            anchor = select_anchor(anchor_pool, target.speaker_id, target.utterance_id, int(rng.integers(2**31)))
            mixtures.append(
                MixtureSpec(
                    mixture_id=f"{split}_{rep}_{target.utterance_id}",
                    target_utt=target.utterance_id,
                    interferer_utt=interferer.utterance_id,
                    anchor_utt=anchor.utterance_id,
                    gain_db=round(gain, 4),
                    split=split,
                )
            )
    return mixtures


def generate_toy_corpus(cfg: CorpusConfig, root: str | Path | None = None, show_progress: bool = False) -> Manifest:
    """Render the toy corpus under ``root`` and write its manifest.

    Layout: ``root/<speaker_id>/<utterance_id>.wav`` plus ``root/manifest.jsonl``.
    The last ``val_utts_per_speaker`` utterances of every speaker form the
    validation split. Regeneration from the same config is bit-identical.
    """
    if cfg.n_speakers < 2:
        raise ConfigError("the toy corpus needs at least 2 speakers")
    cfg.validate()
    root = Path(root if root is not None else cfg.root)
    sr = DEFAULT_SAMPLE_RATE

    records: list[UtteranceRecord] = []
    jobs = [(s, u) for s in range(cfg.n_speakers) for u in range(cfg.utts_per_speaker)]
    voices = [make_voice(s, cfg.n_speakers, cfg.seed) for s in range(cfg.n_speakers)]
    for s, u in tqdm(jobs, desc="synthesising", disable=not show_progress):
        voice = voices[s]
        rng = np.random.default_rng([cfg.seed, s, u + 1])
        duration = float(rng.uniform(cfg.min_duration_s, cfg.max_duration_s))
        samples = synthesize_utterance(voice, duration, rng, sr)
        utt_id = f"{voice.speaker_id}_u{u:03d}"
        rel = Path(voice.speaker_id) / f"{utt_id}.wav"
        write_wav(root / rel, samples.astype(np.float32), sr, subtype="float")
        split = "val" if u >= cfg.utts_per_speaker - cfg.val_utts_per_speaker else "train"
        records.append(UtteranceRecord(utt_id, voice.speaker_id, rel.as_posix(), len(samples) / sr, split))

    train = [r for r in records if r.split == "train"]
    val = [r for r in records if r.split == "val"]
    anchor_pool = Manifest(train)
    rng = np.random.default_rng([cfg.seed, 10_000])
    mixtures = _pair_mixtures("train", train, anchor_pool, cfg, rng)
    if val:
        mixtures += _pair_mixtures("val", val, anchor_pool, cfg, rng)

    echo = to_dict(cfg)
    echo.pop("root")
    manifest = Manifest(records, mixtures, meta={"generator": "toy", "config": echo}).validate()
    manifest.save(root / MANIFEST_NAME)
    logger.info("toy corpus: %d utterances, %d mixtures under %s", len(records), len(mixtures), root)
    return manifest
