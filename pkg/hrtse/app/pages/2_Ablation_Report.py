"""Ablation Report page - Mixture vs. local / global / HR fusion."""

import streamlit as st

from hrtse.app.config import get_runs_root, render_settings_sidebar
from hrtse.app.store import discover_ablations
from hrtse.artifacts import read_json
from hrtse.evaluation import METRIC_COLUMNS
from hrtse.plotting import metric_bars_figure

st.set_page_config(page_title="Ablation Report", page_icon="📊", layout="wide")
st.title("📊 Ablation Report")

render_settings_sidebar()

runs_root = get_runs_root()
ablations = discover_ablations(runs_root)
if not ablations:
    st.warning(f"No ablation.json found under {runs_root}. Run `hrtse ablate` first.")
    st.stop()

options = {p.parent.relative_to(runs_root).as_posix() or ".": p for p in ablations}
choice = st.selectbox("Select ablation", options=list(options))
ablation = read_json(options[choice])

st.caption(f"Seeds: {', '.join(str(s) for s in ablation['seeds'])}")

st.dataframe(
    [{"system": name, **{c: row[c] for c in METRIC_COLUMNS}} for name, row in ablation["rows"].items()],
    use_container_width=True,
)

if ablation.get("ordering_holds"):
    st.success("HR fusion beats both single-feature modes on SI-SNR for most seeds")
else:
    st.warning("HR fusion did not beat both single-feature modes for most seeds")

st.pyplot(metric_bars_figure(ablation["rows"]))

with st.expander("Per-seed results"):
    for seed, rows in ablation["per_seed"].items():
        st.markdown(f"**Seed {seed}**")
        st.dataframe(
            [{"system": name, **row} for name, row in rows.items()],
            use_container_width=True,
        )
