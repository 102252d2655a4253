"""Deterministic, length-bucketed mixture batches."""

from __future__ import annotations

from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import torch

from hrtse.data.manifest import Manifest, MixtureSpec
from hrtse.data.mixing import AudioStore, MixtureExample
from hrtse.errors import ConfigError

# shuffled mixtures are sorted by length inside pools of this many batches
BUCKET_POOL_BATCHES = 4


@dataclass(frozen=True)
class MixtureBatch:
    mixture_ids: list[str]
    mixture: torch.Tensor
    target: torch.Tensor
    interferer: torch.Tensor
    anchor: torch.Tensor
    target_speaker_ids: list[str]
    interferer_speaker_ids: list[str]

    def __len__(self) -> int:
        return len(self.mixture_ids)


def mixture_duration(manifest: Manifest, spec: MixtureSpec) -> float:
    return min(manifest.record(spec.target_utt).duration_s, manifest.record(spec.interferer_utt).duration_s)


def batch_order(
    manifest: Manifest,
    batch_size: int,
    shuffle_seed: int | None = None,
    split: str | None = None,
) -> list[list[MixtureSpec]]:
    """Group the mixtures of ``split`` into batches.

    Without a seed the manifest order is kept. With a seed the mixtures are
    permuted, then sorted by duration inside pools of a few batches so each
    batch holds similar lengths. Every mixture appears exactly once.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    specs = manifest.split_mixtures(split)
    if shuffle_seed is not None:
        perm = np.random.default_rng(shuffle_seed).permutation(len(specs))
        specs = [specs[i] for i in perm]
        pool = batch_size * BUCKET_POOL_BATCHES
        bucketed = []
        for start in range(0, len(specs), pool):
            chunk = specs[start : start + pool]
            bucketed += sorted(chunk, key=lambda s: mixture_duration(manifest, s))
        specs = bucketed
    return [specs[i : i + batch_size] for i in range(0, len(specs), batch_size)]


def collate(examples: list[MixtureExample], max_samples: int | None = None) -> MixtureBatch:
    """Stack examples, truncating every signal to the batch's shortest member."""
    n = min(e.mixture.shape[-1] for e in examples)
    na = min(e.anchor.shape[-1] for e in examples)
    if max_samples is not None:
        n, na = min(n, max_samples), min(na, max_samples)
    return MixtureBatch(
        mixture_ids=[e.mixture_id for e in examples],
        mixture=torch.stack([e.mixture[..., :n] for e in examples]),
        target=torch.stack([e.target[..., :n] for e in examples]),
        interferer=torch.stack([e.interferer[..., :n] for e in examples]),
        anchor=torch.stack([e.anchor[..., :na] for e in examples]),
        target_speaker_ids=[e.target_speaker_id for e in examples],
        interferer_speaker_ids=[e.interferer_speaker_id for e in examples],
    )


def batch_iterator(
    manifest: Manifest,
    batch_size: int,
    shuffle_seed: int | None = None,
    *,
    store: AudioStore,
    split: str | None = None,
    max_samples: int | None = None,
    prefetch_workers: int = 0,
) -> Iterator[MixtureBatch]:
    """Stream MixtureBatch objects in the order given by :func:`batch_order`.

    With ``prefetch_workers > 0`` audio is decoded on a thread pool; emission
    order is unchanged.
    """
    batches = batch_order(manifest, batch_size, shuffle_seed, split)
    if prefetch_workers > 0:
        with ThreadPoolExecutor(max_workers=prefetch_workers) as pool:
            for specs in batches:
                yield collate(list(pool.map(store.example, specs)), max_samples)
    else:
        for specs in batches:
            yield collate([store.example(s) for s in specs], max_samples)
