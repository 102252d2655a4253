import dataclasses

import pytest
import torch

from hrtse.checkpoint import (
    EXTRACTOR_KIND,
    load_checkpoint,
    load_embedder,
    load_extractor,
    save_extractor,
    state_sha256,
)
from hrtse.config import ModelConfig, to_dict
from hrtse.errors import CheckpointError
from hrtse.evaluation import ExtractorEstimator, evaluate_set
from hrtse.extractor import Extractor
from hrtse.models.ecapa import Ecapa


@pytest.fixture
def extractor(run_config, embedder_path) -> Extractor:
    torch.manual_seed(1)
    return Extractor.from_config(run_config.model, load_embedder(embedder_path), mode="hr")


def test_embedder_round_trip(embedder_path, run_config):
    first = load_embedder(embedder_path)
    second = load_embedder(embedder_path, run_config)
    assert state_sha256(first) == state_sha256(second)
    assert not any(p.requires_grad for p in first.parameters())
    assert not first.training


def test_embedder_profile_mismatch(embedder_path, run_config):
    full = dataclasses.replace(run_config, model=ModelConfig(profile="full"))
    with pytest.raises(CheckpointError, match="profile"):
        load_embedder(embedder_path, full)


def test_extractor_round_trip(tmp_path, extractor, run_config, embedder_path):
    path = save_extractor(tmp_path / "x.pt", extractor, run_config, embedder_path, extra={"epoch": 3})
    loaded, cfg, extra = load_extractor(path)
    assert cfg == run_config
    assert extra["epoch"] == 3
    assert extra["embedder_sha256"] == state_sha256(extractor.embedder)
    mixture, anchor = torch.randn(16000), torch.randn(8000)
    assert torch.equal(extractor.separate(mixture, anchor), loaded.separate(mixture, anchor))


def test_reloaded_extractor_writes_identical_reports(tmp_path, extractor, run_config, embedder_path, manifest, store):
    path = save_extractor(tmp_path / "x.pt", extractor, run_config, embedder_path)
    loaded, cfg, _ = load_extractor(path)
    echo = to_dict(cfg)
    evaluate_set(manifest, ExtractorEstimator(extractor), store, run_config.evaluation, tmp_path / "before", echo)
    evaluate_set(manifest, ExtractorEstimator(loaded), store, cfg.evaluation, tmp_path / "after", echo)
    for suffix in (".csv", ".json"):
        before = (tmp_path / "before").with_suffix(suffix).read_bytes()
        assert before == (tmp_path / "after").with_suffix(suffix).read_bytes()


def test_extractor_rejects_other_embedder(tmp_path, extractor, run_config, embedder_path):
    path = save_extractor(tmp_path / "x.pt", extractor, run_config, embedder_path)
    torch.manual_seed(123)
    other = Ecapa(run_config.model.embedder())
    with pytest.raises(CheckpointError, match="embedder weights"):
        load_extractor(path, other)


def test_extractor_config_mismatch(tmp_path, extractor, run_config, embedder_path):
    path = save_extractor(tmp_path / "x.pt", extractor, run_config, embedder_path)
    other = dataclasses.replace(run_config, model=ModelConfig(deepfilter_taps=(3, 3)))
    with pytest.raises(CheckpointError, match="model config"):
        load_extractor(path, expected=other)


def test_wrong_kind_missing_and_corrupt(tmp_path, embedder_path):
    with pytest.raises(CheckpointError, match="expected a"):
        load_checkpoint(embedder_path, EXTRACTOR_KIND)
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "missing.pt")
    corrupt = tmp_path / "corrupt.pt"
    corrupt.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(corrupt)
