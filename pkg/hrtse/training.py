"""Joint training of separator, local feature net and fusion projection."""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
import yaml
from tqdm import tqdm

from hrtse.artifacts import read_json, write_json, write_text
from hrtse.checkpoint import load_embedder, save_extractor
from hrtse.config import RunConfig, to_dict
from hrtse.data.batching import MixtureBatch, batch_iterator
from hrtse.data.manifest import Manifest
from hrtse.data.mixing import AudioStore
from hrtse.errors import CheckpointError, ManifestError, NonFiniteLossError
from hrtse.extractor import Extractor
from hrtse.losses import LossBreakdown, total_loss

logger = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.pt"
LAST_CHECKPOINT = "last.pt"
LOG_NAME = "training_log.json"
NAN_DUMP = "nonfinite_loss.json"


def set_seed(seed: int, deterministic: bool = False) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.cuda.manual_seed_all(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.backends.cudnn.deterministic = True
        torch.backends.cudnn.benchmark = False


def lr_step(history: list[float], lr: float, plateau: int = 2) -> float:
    """Halve ``lr`` after every ``plateau`` consecutive epochs without a new best val loss.

    Args:
        history: Validation losses so far, oldest first.
        lr: Current learning rate.
        plateau: Number of non-improving epochs that triggers a halving.

    Returns:
        New learning rate
    """
    if not history:
        return lr
    best = history[0]
    stale = 0
    for value in history[1:]:
        if value < best:
            best, stale = value, 0
        else:
            stale += 1
    if stale >= plateau and stale % plateau == 0:
        return lr / 2
    return lr


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train: dict[str, float]
    val: dict[str, float]
    seconds: float


@dataclass
class TrainingLog:
    seed: int
    mode: str
    config: dict[str, Any]
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    best_val: float | None = None
    stop_reason: str = ""

    @property
    def lr_trace(self) -> list[float]:
        return [e.lr for e in self.epochs]

    @property
    def val_history(self) -> list[float]:
        return [e.val["total"] for e in self.epochs]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def save(self, path: str | Path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> TrainingLog:
        data = read_json(path)
        epochs = [EpochRecord(**e) for e in data.pop("epochs", [])]
        return cls(epochs=epochs, **data)


def _mean_breakdowns(items: list[dict[str, float]]) -> dict[str, float]:
    if not items:
        return {}
    return {k: float(np.mean([d[k] for d in items])) for k in items[0]}


class Trainer:
    """Adam training with validation-driven lr halving and best-checkpoint retention.

    Args:
        cfg: Effective run configuration (echoed into every artifact).
        manifest: Corpus manifest with ``train`` and ``val`` mixtures.
        store: Audio loader for the manifest.
        embedder_path: Frozen embedder checkpoint.
        out_dir: Destination for checkpoints and the training log.
        mode: Fusion mode; defaults to ``cfg.train.mode``.
    """

    def __init__(
        self,
        cfg: RunConfig,
        manifest: Manifest,
        store: AudioStore,
        embedder_path: str | Path,
        out_dir: str | Path,
        mode: str | None = None,
    ):
        self.cfg = cfg
        self.manifest = manifest
        self.store = store
        self.embedder_path = Path(embedder_path)
        self.out_dir = Path(out_dir)
        self.mode = mode or cfg.train.mode
        if not self.embedder_path.exists():
            raise CheckpointError(f"embedder checkpoint not found: {self.embedder_path} (run 'hrtse embedder train')")
        if not manifest.split_mixtures("train"):
            raise ManifestError("manifest has no training mixtures")

        set_seed(cfg.seed, cfg.train.deterministic)
        embedder = load_embedder(self.embedder_path, cfg)
        self.extractor = Extractor.from_config(
            cfg.model, embedder, cfg.stft, cfg.fbank, self.mode, cfg.train.loss.compress_p
        )
        tc = cfg.train
        self.optimizer = torch.optim.Adam(
            self.extractor.trainable_parameters(), lr=tc.lr, betas=tuple(tc.betas), eps=tc.adam_eps
        )
        self.max_samples = round(tc.segment_s * cfg.stft.sample_rate_hz)
        self.log = TrainingLog(seed=cfg.seed, mode=self.mode, config=to_dict(cfg))

    @property
    def lr(self) -> float:
        return self.optimizer.param_groups[0]["lr"]

    def _set_lr(self, lr: float) -> None:
        for group in self.optimizer.param_groups:
            group["lr"] = lr

    def _loss(self, batch: MixtureBatch) -> LossBreakdown:
        est = self.extractor(batch.mixture, batch.anchor, self.mode)
        return total_loss(est, batch.target, self.cfg.train.loss, self.cfg.stft)

    def _dump_nonfinite(self, epoch: int, step: int, batch: MixtureBatch, loss: LossBreakdown) -> Path:
        path = self.out_dir / NAN_DUMP
        write_json(
            path,
            {
                "epoch": epoch,
                "step": step,
                "lr": self.lr,
                "mixture_ids": batch.mixture_ids,
                "loss": loss.as_floats(),
                "config": to_dict(self.cfg),
            },
        )
        return path

    def train_epoch(self, epoch: int, show_progress: bool = False) -> dict[str, float]:
        tc = self.cfg.train
        self.extractor.train()
        batches = batch_iterator(
            self.manifest,
            tc.batch_size,
            shuffle_seed=self.cfg.seed * 100_003 + epoch,
            store=self.store,
            split="train",
            max_samples=self.max_samples,
            prefetch_workers=tc.prefetch_workers,
        )
        records = []
        progress = tqdm(batches, desc=f"epoch {epoch}", disable=not show_progress)
        for step, batch in enumerate(progress):
            loss = self._loss(batch)
            if not loss.is_finite():
                path = self._dump_nonfinite(epoch, step, batch, loss)
                raise NonFiniteLossError(f"non-finite loss at epoch {epoch} step {step}; diagnostics in {path}")
            self.optimizer.zero_grad()
            loss.total.backward()
            torch.nn.utils.clip_grad_norm_(self.extractor.trainable_parameters(), tc.grad_clip)
            self.optimizer.step()
            records.append(loss.as_floats())
            progress.set_postfix(loss=f"{records[-1]['total']:.3f}")
        return _mean_breakdowns(records)

    @torch.no_grad()
    def validate(self) -> dict[str, float]:
        self.extractor.eval()
        split = "val" if self.manifest.split_mixtures("val") else "train"
        records = [
            self._loss(batch).as_floats()
            for batch in batch_iterator(
                self.manifest, self.cfg.train.batch_size, store=self.store, split=split, max_samples=self.max_samples
            )
        ]
        return _mean_breakdowns(records)

    def save(self, name: str, epoch: int) -> Path:
        return save_extractor(
            self.out_dir / name,
            self.extractor,
            self.cfg,
            self.embedder_path,
            extra={"epoch": epoch, "val_history": self.log.val_history},
        )

    def fit(self, show_progress: bool = False) -> TrainingLog:
        """Train until ``max_epochs`` or until the lr falls below ``min_lr``."""
        tc = self.cfg.train
        self.out_dir.mkdir(parents=True, exist_ok=True)
        write_text(self.out_dir / "config.yaml", yaml.safe_dump(to_dict(self.cfg), sort_keys=False))
        for epoch in range(1, tc.max_epochs + 1):
            start = time.perf_counter()
            lr = self.lr
            train = self.train_epoch(epoch, show_progress)
            val = self.validate()
            self.log.epochs.append(EpochRecord(epoch, lr, train, val, time.perf_counter() - start))
            logger.info(
                "epoch %d lr %.2e train %.4f val %.4f (ri %.4f mag %.4f -si-snr %.3f)",
                epoch,
                lr,
                train["total"],
                val["total"],
                val["l_ri"],
                val["l_mag"],
                val["l_si_snr"],
            )
            if self.log.best_val is None or val["total"] < self.log.best_val:
                self.log.best_val, self.log.best_epoch = val["total"], epoch
                self.save(BEST_CHECKPOINT, epoch)
            self.save(LAST_CHECKPOINT, epoch)
            self.log.save(self.out_dir / LOG_NAME)

            if tc.lr_halving:
                new_lr = lr_step(self.log.val_history, lr, tc.plateau_epochs)
                if new_lr != lr:
                    logger.info("validation loss stalled for %d epochs, lr %.2e -> %.2e", tc.plateau_epochs, lr, new_lr)
                    self._set_lr(new_lr)
            if self.lr < tc.min_lr:
                self.log.stop_reason = f"lr below {tc.min_lr:g}"
                break
        else:
            self.log.stop_reason = "max_epochs"
        self.log.save(self.out_dir / LOG_NAME)
        return self.log


def train(
    cfg: RunConfig,
    manifest: Manifest,
    store: AudioStore,
    out_dir: str | Path | None = None,
    mode: str | None = None,
    embedder_path: str | Path | None = None,
    show_progress: bool = False,
) -> TrainingLog:
    """Train one extractor and return its log; checkpoints land in ``out_dir``."""
    trainer = Trainer(
        cfg,
        manifest,
        store,
        embedder_path or cfg.embedder.checkpoint,
        out_dir or cfg.train.checkpoint_dir,
        mode,
    )
    log = trainer.fit(show_progress)
    if not all(math.isfinite(v) for v in log.val_history):
        raise NonFiniteLossError("validation loss became non-finite")
    return log
