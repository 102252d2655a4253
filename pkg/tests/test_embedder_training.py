import json

import pytest
import torch

from hrtse.checkpoint import load_checkpoint, load_embedder, state_sha256
from hrtse.data.manifest import Manifest
from hrtse.embedder_training import (
    AmSoftmaxHead,
    cosine_matrix,
    embed_utterances,
    export_embeddings,
    speaker_separability,
    train_embedder,
)
from hrtse.errors import ManifestError


def test_am_softmax_margin_raises_the_loss():
    torch.manual_seed(0)
    head = AmSoftmaxHead(8, 3, margin=0.2, scale=30.0)
    emb, labels = torch.randn(4, 8), torch.tensor([0, 1, 2, 0])
    loss, cos = head(emb, labels)
    plain = torch.nn.functional.cross_entropy(30.0 * cos, labels)
    assert cos.shape == (4, 3)
    assert (cos.abs() <= 1 + 1e-6).all()
    assert float(loss) > float(plain)


def test_train_embedder_saves_a_frozen_checkpoint(run_config, manifest, store, tmp_path):
    out = tmp_path / "emb.pt"
    embedder, log = train_embedder(manifest, store, run_config, out)
    assert log.speakers == ["spk00", "spk01", "spk02"]
    assert len(log.epochs) == 1
    assert log.best_epoch == 1
    assert 0.0 <= log.epochs[0].val_accuracy <= 1.0
    assert not any(p.requires_grad for p in embedder.parameters())
    assert state_sha256(load_embedder(out)) == state_sha256(embedder)
    assert load_checkpoint(out)["extra"]["log"]["speakers"] == log.speakers


def test_train_embedder_needs_two_speakers(run_config, manifest, store):
    single = Manifest([r for r in manifest.records if r.speaker_id == "spk00"])
    with pytest.raises(ManifestError, match="2 speakers"):
        train_embedder(single, store, run_config)


def test_embed_and_export(run_config, manifest, store, embedder_path, tmp_path):
    embedder = load_embedder(embedder_path)
    records = embed_utterances(embedder, manifest, store, run_config, split="val")
    assert [r.utterance_id for r in records] == [r.utterance_id for r in manifest.records if r.split == "val"]
    assert all(len(r.embedding) == 256 for r in records)
    path = export_embeddings(tmp_path / "emb.jsonl", records)
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert [line["speaker_id"] for line in lines] == [r.speaker_id for r in records]


def test_separability_of_clustered_embeddings():
    centres = torch.eye(3, 16)
    emb = torch.cat([centres + 0.01 * torch.randn(3, 16) for _ in range(2)])
    ids = ["a", "b", "c"] * 2
    stats = speaker_separability(emb, ids)
    assert stats["intra"] > 0.9
    assert abs(stats["inter"]) < 0.1
    assert stats["gap"] == pytest.approx(stats["intra"] - stats["inter"])
    assert torch.allclose(cosine_matrix(emb).diagonal(), torch.ones(6), atol=1e-6)


def test_separability_needs_pairs():
    with pytest.raises(ValueError):
        speaker_separability(torch.randn(2, 4), ["a", "b"])
