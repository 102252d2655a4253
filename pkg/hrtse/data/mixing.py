"""Two-talker mixture simulation under the minimum-duration protocol."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from hrtse.audio_io import read_wav
from hrtse.data.manifest import Manifest, MixtureSpec, UtteranceRecord
from hrtse.errors import InsufficientAnchorError, ManifestError, TooShortError


@dataclass(frozen=True)
class MixtureExample:
    mixture_id: str
    mixture: torch.Tensor
    target: torch.Tensor
    interferer: torch.Tensor
    anchor: torch.Tensor
    target_speaker_id: str
    interferer_speaker_id: str
    target_utt: str = ""
    anchor_utt: str = ""


def db_to_gain(gain_db: float) -> float:
    return float(10.0 ** (gain_db / 20.0))


def simulate_mixture(
    s1: torch.Tensor, s2: torch.Tensor, gain_db: float = 0.0
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Mix target ``s1`` with interferer ``s2`` scaled by ``gain_db``.

    Both sources are cut to the shorter length, so ``mixture == target + interferer``
    holds samplewise in the sources' dtype.

    Returns:
        Tuple of (mixture, target, interferer)
    """
    if s1.numel() == 0 or s2.numel() == 0:
        raise TooShortError("cannot mix an empty waveform")
    n = min(s1.shape[-1], s2.shape[-1])
    target = s1[..., :n]
    interferer = s2[..., :n] * db_to_gain(gain_db)
    return target + interferer, target, interferer


def select_anchor(manifest: Manifest, target_speaker: str, exclude_utt: str, rng_seed) -> UtteranceRecord:
    """Pick an anchor utterance of ``target_speaker`` other than ``exclude_utt``.

    Selection is uniform over the candidates and deterministic given ``rng_seed``
    (anything ``numpy.random.default_rng`` accepts).
    """
    candidates = [
        r
        for r in manifest.utterances_by_speaker().get(target_speaker, [])
        if r.utterance_id != exclude_utt
    ]
    if not candidates:
        raise InsufficientAnchorError(f"speaker {target_speaker!r} has no utterance besides {exclude_utt!r}")
    rng = np.random.default_rng(rng_seed)
    return candidates[int(rng.integers(len(candidates)))]


class AudioStore:
    """Loads utterance audio from the corpus root, with an in-memory cache."""

    def __init__(self, manifest: Manifest, root: str | Path, cache: bool = True):
        self.manifest = manifest
        self.root = Path(root)
        self.cache = cache
        self._cache: dict[str, torch.Tensor] = {}
        self._lock = threading.Lock()

    def path_of(self, record: UtteranceRecord) -> Path:
        path = Path(record.path)
        return path if path.is_absolute() else self.root / path

    def load(self, utterance_id: str) -> torch.Tensor:
        with self._lock:
            if utterance_id in self._cache:
                return self._cache[utterance_id]
        path = self.path_of(self.manifest.record(utterance_id))
        if not path.exists():
            raise ManifestError(f"audio file missing: {path}")
        wave = read_wav(path)
        if self.cache:
            with self._lock:
                self._cache[utterance_id] = wave
        return wave

    def example(self, spec: MixtureSpec) -> MixtureExample:
        target_rec = self.manifest.record(spec.target_utt)
        interferer_rec = self.manifest.record(spec.interferer_utt)
        mixture, target, interferer = simulate_mixture(
            self.load(spec.target_utt), self.load(spec.interferer_utt), spec.gain_db
        )
        return MixtureExample(
            mixture_id=spec.mixture_id,
            mixture=mixture,
            target=target,
            interferer=interferer,
            anchor=self.load(spec.anchor_utt),
            target_speaker_id=target_rec.speaker_id,
            interferer_speaker_id=interferer_rec.speaker_id,
            target_utt=spec.target_utt,
            anchor_utt=spec.anchor_utt,
        )
