"""App configuration and settings management."""

import os
from pathlib import Path

import streamlit as st

from hrtse.config import (
    CORPUS_ROOT_ENV,
    DEFAULT_CORPUS_ROOT,
    DEFAULT_RUNS_ROOT,
    MANIFEST_NAME,
    RUNS_ROOT_ENV,
)


def get_paths_config() -> dict[str, str]:
    """Get runs/corpus locations from session state, secrets, or environment."""
    # Priority: session_state > secrets > environment > defaults
    config = {
        "runs_root": DEFAULT_RUNS_ROOT,
        "corpus_root": DEFAULT_CORPUS_ROOT,
    }

    config["runs_root"] = os.environ.get(RUNS_ROOT_ENV, config["runs_root"])
    config["corpus_root"] = os.environ.get(CORPUS_ROOT_ENV, config["corpus_root"])

    # Try Streamlit secrets; a missing secrets.toml raises on access
    try:
        secrets = st.secrets["hrtse"] if "hrtse" in st.secrets else {}
    except Exception:
        secrets = {}
    config["runs_root"] = secrets.get("runs_root", config["runs_root"])
    config["corpus_root"] = secrets.get("corpus_root", config["corpus_root"])

    if "paths_config" in st.session_state:
        config.update(st.session_state.paths_config)

    return config


def get_runs_root() -> Path:
    return Path(get_paths_config()["runs_root"])


def get_manifest_path() -> Path:
    return Path(get_paths_config()["corpus_root"]) / MANIFEST_NAME


def render_settings_sidebar() -> None:
    """Render settings in sidebar."""
    with st.sidebar.expander("Settings", expanded=False):
        config = get_paths_config()
        runs_root = st.text_input(
            "Runs directory",
            value=config["runs_root"],
            help="Directory holding training runs, reports and ablations",
        )
        corpus_root = st.text_input(
            "Corpus directory",
            value=config["corpus_root"],
            help=f"Directory with {MANIFEST_NAME} and the audio it references",
        )

        if st.button("Update paths"):
            st.session_state.paths_config = {"runs_root": runs_root, "corpus_root": corpus_root}
            # cached models and manifests point at the old locations
            st.cache_resource.clear()
            st.cache_data.clear()
            st.success("Paths updated!")
            st.rerun()
