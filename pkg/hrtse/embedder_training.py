"""Speaker-classification training of the ECAPA embedder and cosine diagnostics."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from tqdm import tqdm

from hrtse.artifacts import atomic_path
from hrtse.checkpoint import save_embedder
from hrtse.config import RunConfig, to_dict
from hrtse.data.manifest import Manifest, UtteranceRecord
from hrtse.data.mixing import AudioStore
from hrtse.errors import ManifestError
from hrtse.frontend import fbank
from hrtse.models.ecapa import Ecapa, freeze
from hrtse.training import set_seed

logger = logging.getLogger(__name__)


class AmSoftmaxHead(nn.Module):
    """Additive-margin softmax over cosine similarities to class centres."""

    def __init__(self, embedding_dim: int, n_classes: int, margin: float = 0.2, scale: float = 30.0):
        super().__init__()
        self.margin = margin
        self.scale = scale
        self.weight = nn.Parameter(torch.empty(n_classes, embedding_dim))
        nn.init.xavier_normal_(self.weight)

    def cosine(self, embeddings: torch.Tensor) -> torch.Tensor:
        return F.normalize(embeddings, dim=1) @ F.normalize(self.weight, dim=1).T

    def forward(self, embeddings: torch.Tensor, labels: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Return (loss, cosine logits without margin)."""
        cos = self.cosine(embeddings)
        margin = F.one_hot(labels, cos.shape[1]).to(cos.dtype) * self.margin
        loss = F.cross_entropy(self.scale * (cos - margin), labels)
        return loss, cos


@dataclass
class EmbedderEpoch:
    epoch: int
    loss: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class EmbedderTrainLog:
    speakers: list[str]
    config: dict[str, Any]
    epochs: list[EmbedderEpoch] = field(default_factory=list)
    best_epoch: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _segment(wave: torch.Tensor, length: int, rng: np.random.Generator) -> torch.Tensor:
    if wave.shape[-1] <= length:
        return wave
    start = int(rng.integers(wave.shape[-1] - length + 1))
    return wave[start : start + length]


def _batch(
    records: list[UtteranceRecord],
    store: AudioStore,
    length: int,
    rng: np.random.Generator | None,
) -> torch.Tensor:
    waves = [store.load(r.utterance_id) for r in records]
    if rng is not None:
        waves = [_segment(w, length, rng) for w in waves]
    n = min(w.shape[-1] for w in waves)
    return torch.stack([w[:n] for w in waves])


def train_embedder(
    manifest: Manifest,
    store: AudioStore,
    cfg: RunConfig,
    out_path: str | Path | None = None,
    show_progress: bool = False,
) -> tuple[Ecapa, EmbedderTrainLog]:
    """Train the embedder as a speaker classifier and save it frozen.

    Training utterances are cut into random ``segment_s`` crops; accuracy on
    the ``val`` utterances (full length) drives early stopping after
    ``patience`` epochs without improvement. The best weights are kept.

    Returns:
        Tuple of (frozen embedder, training log)
    """
    ec = cfg.embedder
    train_records = [r for r in manifest.records if r.split == "train"]
    val_records = [r for r in manifest.records if r.split == "val"]
    speakers = sorted({r.speaker_id for r in train_records})
    if len(speakers) < 2:
        raise ManifestError(f"embedder training needs >= 2 speakers, manifest has {len(speakers)}")
    label_of = {s: i for i, s in enumerate(speakers)}
    val_records = [r for r in val_records if r.speaker_id in label_of] or train_records

    set_seed(cfg.seed)
    embedder = Ecapa(cfg.model.embedder())
    head = AmSoftmaxHead(embedder.cfg.embedding_dim, len(speakers), ec.margin, ec.scale)
    optimizer = torch.optim.Adam([*embedder.parameters(), *head.parameters()], lr=ec.lr)
    segment = round(ec.segment_s * cfg.stft.sample_rate_hz)
    log = EmbedderTrainLog(speakers=speakers, config=to_dict(cfg))
    best_acc, best_state, stale = -1.0, None, 0

    def features(wave: torch.Tensor) -> torch.Tensor:
        return fbank(wave, cfg.stft, cfg.fbank)

    for epoch in range(1, ec.max_epochs + 1):
        rng = np.random.default_rng([cfg.seed, epoch])
        order = rng.permutation(len(train_records))
        embedder.train()
        head.train()
        losses, correct = [], 0
        batches = [order[i : i + ec.batch_size] for i in range(0, len(order), ec.batch_size)]
        for idx in tqdm(batches, desc=f"embedder epoch {epoch}", disable=not show_progress):
            records = [train_records[i] for i in idx]
            labels = torch.tensor([label_of[r.speaker_id] for r in records])
            loss, cos = head(embedder(features(_batch(records, store, segment, rng))), labels)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
            correct += int((cos.argmax(dim=1) == labels).sum())
        train_acc = correct / len(train_records)
        val_acc = speaker_accuracy(embedder, head, val_records, store, label_of, cfg)
        log.epochs.append(EmbedderEpoch(epoch, float(np.mean(losses)), train_acc, val_acc))
        logger.info("embedder epoch %d loss %.4f train acc %.3f val acc %.3f", epoch, np.mean(losses), train_acc, val_acc)

        if val_acc > best_acc:
            best_acc, stale, log.best_epoch = val_acc, 0, epoch
            best_state = {k: v.detach().clone() for k, v in embedder.state_dict().items()}
        else:
            stale += 1
            if stale >= ec.patience:
                logger.info("validation accuracy stalled for %d epochs, stopping", stale)
                break

    if best_state is not None:
        embedder.load_state_dict(best_state)
    freeze(embedder)
    out_path = Path(out_path or ec.checkpoint)
    save_embedder(out_path, embedder, cfg, extra={"log": log.to_dict()})
    logger.info("saved embedder (best epoch %s, val acc %.3f) to %s", log.best_epoch, best_acc, out_path)
    return embedder, log


@torch.no_grad()
def speaker_accuracy(
    embedder: Ecapa,
    head: AmSoftmaxHead,
    records: list[UtteranceRecord],
    store: AudioStore,
    label_of: dict[str, int],
    cfg: RunConfig,
) -> float:
    embedder.eval()
    head.eval()
    correct = 0
    for r in records:
        emb = embedder(fbank(store.load(r.utterance_id).unsqueeze(0), cfg.stft, cfg.fbank))
        correct += int(head.cosine(emb).argmax(dim=1).item() == label_of[r.speaker_id])
    return correct / max(len(records), 1)


@dataclass(frozen=True)
class EmbeddingRecord:
    utterance_id: str
    speaker_id: str
    embedding: list[float]


@torch.no_grad()
def embed_utterances(
    embedder: Ecapa,
    manifest: Manifest,
    store: AudioStore,
    cfg: RunConfig,
    split: str | None = None,
) -> list[EmbeddingRecord]:
    """Embed every utterance of ``split`` (all when None) in manifest order."""
    out = []
    for r in manifest.records:
        if split is not None and r.split != split:
            continue
        emb = embedder.embed(store.load(r.utterance_id).unsqueeze(0), cfg.stft, cfg.fbank)[0]
        out.append(EmbeddingRecord(r.utterance_id, r.speaker_id, [float(v) for v in emb]))
    return out


def export_embeddings(path: str | Path, records: list[EmbeddingRecord]) -> Path:
    """One JSON object per line: ``utterance_id``, ``speaker_id``, ``embedding``."""
    with atomic_path(path) as tmp:
        tmp.write_text("".join(json.dumps(asdict(r)) + "\n" for r in records), encoding="utf-8")
    return Path(path)


def cosine_matrix(embeddings: torch.Tensor) -> torch.Tensor:
    """Pairwise cosine similarity of ``[N, D]`` embeddings."""
    normed = F.normalize(embeddings, dim=1)
    return normed @ normed.T


def speaker_separability(embeddings: torch.Tensor, speaker_ids: list[str]) -> dict[str, float]:
    """Mean intra-speaker and inter-speaker cosine over distinct utterance pairs."""
    if embeddings.shape[0] != len(speaker_ids):
        raise ValueError("one speaker id per embedding is required")
    cos = cosine_matrix(embeddings)
    labels = np.asarray(speaker_ids)
    same = torch.from_numpy(labels[:, None] == labels[None, :])
    off_diag = ~torch.eye(len(speaker_ids), dtype=torch.bool)
    intra, inter = cos[same & off_diag], cos[~same]
    if intra.numel() == 0 or inter.numel() == 0:
        raise ValueError("need two utterances of one speaker and two different speakers")
    return {"intra": float(intra.mean()), "inter": float(inter.mean()), "gap": float(intra.mean() - inter.mean())}
