"""Run discovery and cached model/corpus loading for the Streamlit app."""

from dataclasses import dataclass
from pathlib import Path

import streamlit as st

from hrtse.checkpoint import load_extractor
from hrtse.config import RunConfig
from hrtse.data.manifest import Manifest
from hrtse.data.mixing import AudioStore
from hrtse.extractor import Extractor
from hrtse.training import BEST_CHECKPOINT, LAST_CHECKPOINT, LOG_NAME


@dataclass(frozen=True)
class RunInfo:
    """A training run directory (one that holds a training log)."""

    name: str
    path: Path

    @property
    def log_path(self) -> Path:
        return self.path / LOG_NAME

    @property
    def checkpoints(self) -> list[Path]:
        return [self.path / n for n in (BEST_CHECKPOINT, LAST_CHECKPOINT) if (self.path / n).exists()]

    @property
    def reports(self) -> list[Path]:
        return sorted(p for p in self.path.glob("report*.json"))


def discover_runs(runs_root: Path) -> list[RunInfo]:
    """All run directories below ``runs_root``, sorted by relative path."""
    if not runs_root.is_dir():
        return []
    return [
        RunInfo(log.parent.relative_to(runs_root).as_posix() or ".", log.parent)
        for log in sorted(runs_root.rglob(LOG_NAME))
    ]


def discover_ablations(runs_root: Path) -> list[Path]:
    if not runs_root.is_dir():
        return []
    return sorted(runs_root.rglob("ablation.json"))


@st.cache_resource
def get_extractor(checkpoint: str) -> tuple[Extractor, RunConfig]:
    """Get cached extractor (one per checkpoint path)."""
    extractor, cfg, _ = load_extractor(checkpoint)
    return extractor, cfg


@st.cache_resource
def get_corpus(manifest_path: str) -> tuple[Manifest, AudioStore]:
    """Get cached manifest and audio store."""
    manifest = Manifest.load(manifest_path)
    return manifest, AudioStore(manifest, Path(manifest_path).parent)


def check_runs_root(runs_root: Path) -> tuple[bool, str]:
    """Check that the runs directory exists and holds at least one run.

    Returns:
        Tuple of (is_usable, message)
    """
    try:
        if not runs_root.is_dir():
            raise FileNotFoundError(f"{runs_root} is not a directory")
        runs = discover_runs(runs_root)
    except Exception as e:
        return False, str(e)
    else:
        return True, f"{len(runs)} runs"
