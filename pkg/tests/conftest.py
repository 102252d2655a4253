from pathlib import Path

import pytest
import torch

from hrtse.checkpoint import save_embedder
from hrtse.config import (
    CorpusConfig,
    EmbedderTrainConfig,
    EvalConfig,
    RunConfig,
    TrainConfig,
)
from hrtse.data.manifest import Manifest
from hrtse.data.mixing import AudioStore
from hrtse.data.toy_corpus import generate_toy_corpus
from hrtse.models.ecapa import Ecapa


def tiny_corpus_config(root: Path | str) -> CorpusConfig:
    return CorpusConfig(
        root=str(root),
        n_speakers=3,
        utts_per_speaker=4,
        seed=3,
        min_duration_s=1.2,
        max_duration_s=1.5,
        val_utts_per_speaker=1,
    )


@pytest.fixture(scope="session")
def corpus_config_factory():
    return tiny_corpus_config


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("toy_corpus")
    generate_toy_corpus(tiny_corpus_config(root))
    return root


@pytest.fixture(scope="session")
def manifest(corpus_root) -> Manifest:
    return Manifest.load(corpus_root / "manifest.jsonl")


@pytest.fixture(scope="session")
def store(manifest, corpus_root) -> AudioStore:
    return AudioStore(manifest, corpus_root)


@pytest.fixture
def run_config(corpus_root, tmp_path) -> RunConfig:
    """Desk-profile config sized for a few seconds of CPU work."""
    return RunConfig(
        seed=0,
        corpus=tiny_corpus_config(corpus_root),
        embedder=EmbedderTrainConfig(
            checkpoint=str(tmp_path / "embedder.pt"), batch_size=4, max_epochs=1, segment_s=1.0
        ),
        train=TrainConfig(
            batch_size=4,
            max_epochs=1,
            segment_s=1.0,
            checkpoint_dir=str(tmp_path / "run"),
            manifest=str(corpus_root / "manifest.jsonl"),
        ),
        evaluation=EvalConfig(split="val"),
    ).validate()


@pytest.fixture
def embedder_path(run_config) -> Path:
    """An untrained desk embedder saved as a checkpoint."""
    torch.manual_seed(0)
    embedder = Ecapa(run_config.model.embedder())
    return save_embedder(run_config.embedder.checkpoint, embedder, run_config)
