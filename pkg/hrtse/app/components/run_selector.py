"""Run and checkpoint selectors."""

from pathlib import Path

import streamlit as st

from hrtse.app.store import RunInfo, discover_runs


def run_selector(runs_root: Path, key_prefix: str = "run_selector", need_checkpoint: bool = False) -> RunInfo | None:
    """Select one training run below ``runs_root``.

    Args:
        runs_root: Directory searched for training logs
        key_prefix: Unique prefix for widget keys
        need_checkpoint: Only offer runs that saved a checkpoint

    Returns:
        Selected RunInfo, or None when there is nothing to select
    """
    runs = discover_runs(runs_root)
    if need_checkpoint:
        runs = [r for r in runs if r.checkpoints]
    if not runs:
        st.warning(f"No training runs found under {runs_root}. Run `hrtse tse train` first.")
        return None

    options = {r.name: r for r in runs}
    name = st.selectbox("Select run", options=list(options), key=f"{key_prefix}_run")
    return options.get(name) if name else None


def checkpoint_selector(run: RunInfo, key_prefix: str = "run_selector") -> Path | None:
    """Select ``best.pt`` or ``last.pt`` of a run."""
    checkpoints = run.checkpoints
    if not checkpoints:
        st.info("This run has no checkpoint yet")
        return None
    choice = st.radio(
        "Checkpoint",
        options=[p.name for p in checkpoints],
        horizontal=True,
        key=f"{key_prefix}_ckpt_{run.name}",
    )
    return run.path / choice
