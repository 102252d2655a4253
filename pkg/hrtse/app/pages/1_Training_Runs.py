"""Training Runs page - Loss curves and epoch history."""

import streamlit as st

from hrtse.app.components.run_selector import run_selector
from hrtse.app.config import get_runs_root, render_settings_sidebar
from hrtse.app.store import check_runs_root
from hrtse.artifacts import read_json
from hrtse.plotting import loss_curve_figure
from hrtse.training import TrainingLog

st.set_page_config(page_title="Training Runs", page_icon="📈", layout="wide")
st.title("📈 Training Runs")

render_settings_sidebar()

runs_root = get_runs_root()
is_usable, message = check_runs_root(runs_root)
if not is_usable:
    st.error(f"Runs directory not usable: {message}")
    st.stop()

run = run_selector(runs_root, key_prefix="runs_page")
if run is None:
    st.stop()

log = TrainingLog.load(run.log_path)

col1, col2, col3, col4 = st.columns(4)
with col1:
    st.metric("Mode", log.mode)
with col2:
    st.metric("Seed", log.seed)
with col3:
    st.metric("Epochs", len(log.epochs))
with col4:
    st.metric("Best val loss", f"{log.best_val:.3f}" if log.best_val is not None else "-")

if log.stop_reason:
    st.caption(f"Stopped: {log.stop_reason} (best epoch {log.best_epoch})")

tab1, tab2, tab3 = st.tabs(["📉 Curves", "📋 Epochs", "📊 Reports"])

with tab1:
    if log.epochs:
        st.pyplot(loss_curve_figure(log))
    else:
        st.info("No completed epochs yet")

with tab2:
    st.dataframe(
        [
            {
                "epoch": e.epoch,
                "lr": e.lr,
                **{f"train_{k}": v for k, v in e.train.items()},
                **{f"val_{k}": v for k, v in e.val.items()},
                "seconds": round(e.seconds, 1),
            }
            for e in log.epochs
        ],
        use_container_width=True,
    )

with tab3:
    if not run.reports:
        st.info("No evaluation reports in this run. Run `hrtse tse eval --report <run>/report` to add one.")
    for report_path in run.reports:
        report = read_json(report_path)
        with st.expander(report_path.name, expanded=True):
            st.json(report.get("aggregate", report))
