"""Listen page - Separate a corpus mixture with a checkpoint and score it."""

import streamlit as st

from hrtse.app.components.audio_player import render_audio
from hrtse.app.components.run_selector import checkpoint_selector, run_selector
from hrtse.app.components.separation_form import separation_form
from hrtse.app.config import get_manifest_path, get_runs_root, render_settings_sidebar
from hrtse.app.store import check_runs_root, get_corpus, get_extractor
from hrtse.errors import HrTseError
from hrtse.evaluation import score_example

st.set_page_config(page_title="Listen", page_icon="🎧", layout="wide")
st.title("🎧 Listen")

render_settings_sidebar()

runs_root = get_runs_root()
is_usable, message = check_runs_root(runs_root)
if not is_usable:
    st.error(f"Runs directory not usable: {message}")
    st.stop()

manifest_path = get_manifest_path()
if not manifest_path.exists():
    st.error(f"No corpus manifest at {manifest_path}")
    st.stop()

# Sidebar: checkpoint selection
with st.sidebar:
    st.subheader("Checkpoint")
    run = run_selector(runs_root, key_prefix="listen", need_checkpoint=True)
    checkpoint = checkpoint_selector(run, key_prefix="listen") if run else None

if checkpoint is None:
    st.info("Select a run with a checkpoint in the sidebar")
    st.stop()

manifest, store = get_corpus(str(manifest_path))
extractor, cfg = get_extractor(str(checkpoint))

request = separation_form(manifest, default_mode=extractor.mode, key_prefix="listen")

if request is not None:
    is_valid, errors = request.is_valid(manifest)
    if not is_valid:
        for error in errors:
            st.error(error)
    else:
        spec = next(m for m in manifest.mixtures if m.mixture_id == request.mixture_id)
        try:
            with st.spinner("Separating..."):
                example = store.example(spec)
                estimate = extractor.separate(example.mixture, example.anchor, mode=request.mode)
                metrics = score_example(estimate, example, cfg.evaluation, cfg.stft)
        except HrTseError as e:
            st.error(f"Separation failed: {e}")
        else:
            st.session_state.listen_result = (request, example, estimate, metrics)

if "listen_result" in st.session_state:
    request, example, estimate, metrics = st.session_state.listen_result
    st.subheader(f"{request.mixture_id} ({request.mode})")

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("SI-SNR", f"{metrics.si_snr:.2f} dB", delta=f"{metrics.si_snri:+.2f} dB")
    with col2:
        st.metric("STOI", f"{metrics.stoi:.3f}")
    with col3:
        st.metric("ESTOI", f"{metrics.estoi:.3f}")
    with col4:
        st.metric("Over-suppressed", "yes" if metrics.tsos_flag else "no")

    col1, col2 = st.columns(2)
    with col1:
        render_audio("Mixture", example.mixture)
        render_audio(f"Anchor ({example.anchor_utt})", example.anchor)
    with col2:
        render_audio("Extracted", estimate)
        render_audio(f"Target ({example.target_utt})", example.target)
