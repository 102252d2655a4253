"""Single-file checkpoints with format version, kind, config echo and state dict."""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import Any

import torch

from hrtse.artifacts import atomic_path
from hrtse.config import RunConfig, from_dict, to_dict
from hrtse.errors import CheckpointError, ConfigError
from hrtse.extractor import Extractor
from hrtse.models.ecapa import Ecapa, freeze

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
EMBEDDER_KIND = "embedder"
EXTRACTOR_KIND = "extractor"


def state_sha256(module: torch.nn.Module) -> str:
    """Digest of a module's parameters and buffers, in state-dict order."""
    h = hashlib.sha256()
    for name, tensor in module.state_dict().items():
        h.update(name.encode())
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def save_checkpoint(
    path: str | Path,
    kind: str,
    config: RunConfig,
    state_dict: dict[str, torch.Tensor],
    extra: dict[str, Any] | None = None,
) -> Path:
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": to_dict(config),
        "state_dict": state_dict,
        "extra": extra or {},
    }
    with atomic_path(path) as tmp:
        torch.save(payload, tmp)
    logger.debug("saved %s checkpoint to %s", kind, path)
    return Path(path)


def load_checkpoint(path: str | Path, kind: str | None = None) -> dict[str, Any]:
    """Read a checkpoint and check its format version and kind.

    Raises:
        CheckpointError: Missing file, unreadable payload, or wrong version/kind.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint format")
    if kind is not None and payload.get("kind") != kind:
        raise CheckpointError(f"{path}: expected a {kind} checkpoint, found {payload.get('kind')!r}")
    return payload


def checkpoint_config(payload: dict[str, Any]) -> RunConfig:
    try:
        return from_dict(RunConfig, payload["config"])
    except ConfigError as e:
        raise CheckpointError(f"checkpoint config echo is invalid: {e}") from e


def _load_state(module: torch.nn.Module, state: dict[str, torch.Tensor], path: Path) -> None:
    try:
        module.load_state_dict(state, strict=True)
    except RuntimeError as e:
        raise CheckpointError(f"{path}: weights do not fit the configured model: {e}") from e


def save_embedder(path: str | Path, embedder: Ecapa, config: RunConfig, extra: dict[str, Any] | None = None) -> Path:
    return save_checkpoint(path, EMBEDDER_KIND, config, embedder.state_dict(), extra)


def load_embedder(path: str | Path, expected: RunConfig | None = None) -> Ecapa:
    """Load a frozen embedder; ``expected`` must agree on the embedder architecture."""
    payload = load_checkpoint(path, EMBEDDER_KIND)
    cfg = checkpoint_config(payload)
    if expected is not None and expected.model.embedder() != cfg.model.embedder():
        raise CheckpointError(f"{path}: embedder was trained with profile {cfg.model.profile!r}")
    embedder = Ecapa(cfg.model.embedder())
    _load_state(embedder, payload["state_dict"], Path(path))
    return freeze(embedder)


def save_extractor(
    path: str | Path,
    extractor: Extractor,
    config: RunConfig,
    embedder_path: str | Path,
    extra: dict[str, Any] | None = None,
) -> Path:
    """Save separator, local net and projection; the embedder is referenced by path and digest."""
    meta = {
        "embedder_path": str(embedder_path),
        "embedder_sha256": state_sha256(extractor.embedder),
        "mode": extractor.mode,
        **(extra or {}),
    }
    return save_checkpoint(path, EXTRACTOR_KIND, config, extractor.separator.state_dict(), meta)


def load_extractor(
    path: str | Path,
    embedder: Ecapa | str | Path | None = None,
    expected: RunConfig | None = None,
) -> tuple[Extractor, RunConfig, dict[str, Any]]:
    """Rebuild an extractor from its checkpoint.

    Args:
        path: Extractor checkpoint.
        embedder: Embedder module or checkpoint path; defaults to the path
            recorded at save time.
        expected: When given, its model/STFT/FBank sections must equal the
            checkpoint's config echo.

    Returns:
        Tuple of (extractor in eval mode, checkpoint config, extra metadata)
    """
    path = Path(path)
    payload = load_checkpoint(path, EXTRACTOR_KIND)
    cfg = checkpoint_config(payload)
    extra = payload.get("extra", {})
    if expected is not None:
        for section in ("model", "stft", "fbank"):
            if getattr(expected, section) != getattr(cfg, section):
                raise CheckpointError(f"{path}: {section} config differs from the checkpoint's")
    if not isinstance(embedder, Ecapa):
        embedder_path = embedder if embedder is not None else extra.get("embedder_path")
        if embedder_path is None:
            raise CheckpointError(f"{path}: no embedder recorded")
        embedder = load_embedder(embedder_path, cfg)
    digest = state_sha256(embedder)
    if extra.get("embedder_sha256") and extra["embedder_sha256"] != digest:
        raise CheckpointError(f"{path}: embedder weights differ from the ones used in training")
    extractor = Extractor.from_config(
        cfg.model,
        embedder,
        cfg.stft,
        cfg.fbank,
        mode=extra.get("mode", cfg.train.mode),
        compress_p=cfg.train.loss.compress_p,
    )
    _load_state(extractor.separator, payload["state_dict"], path)
    return extractor.eval(), cfg, extra
