"""HR-TSE run browser - Main entry point for Streamlit app.

Run with: streamlit run hrtse/app/main.py
"""

import streamlit as st

from hrtse.config import CORPUS_ROOT_ENV, RUNS_ROOT_ENV

st.set_page_config(
    page_title="HR-TSE Run Browser",
    page_icon="🎧",
    layout="wide",
    initial_sidebar_state="expanded",
)


def main():
    """Main application entry point."""
    st.title("HR-TSE Run Browser")
    st.write("Inspect target speaker extraction runs, ablations and separated audio")

    # Import here to avoid circular imports
    from hrtse.app.config import get_manifest_path, get_runs_root, render_settings_sidebar
    from hrtse.app.store import check_runs_root, discover_ablations, discover_runs

    render_settings_sidebar()

    runs_root = get_runs_root()
    is_usable, message = check_runs_root(runs_root)

    if is_usable:
        st.sidebar.success(f"Runs: {message}")

        try:
            runs = discover_runs(runs_root)
            st.subheader("Overview")

            col1, col2, col3 = st.columns(3)
            with col1:
                st.metric("Training runs", len(runs))
            with col2:
                st.metric("With checkpoints", sum(1 for r in runs if r.checkpoints))
            with col3:
                st.metric("Ablations", len(discover_ablations(runs_root)))

            if not get_manifest_path().exists():
                st.warning(f"No corpus manifest at {get_manifest_path()}; the Listen page needs one.")

            st.divider()

            st.info(
                """
                **How to use:**
                1. **Training Runs**: Loss curves, learning-rate trace and per-epoch losses
                2. **Ablation Report**: Mixture / local / global / HR comparison table
                3. **Listen**: Separate a validation mixture with a checkpoint and score it

                Use the sidebar to navigate between pages.
                """
            )

        except Exception as e:
            st.error(f"Error scanning runs: {e}")

    else:
        st.sidebar.error("No runs directory")
        st.error(f"Runs directory not usable: {message}")
        st.info(
            f"""
            Point the app at your runs in the Settings sidebar.

            You can also set environment variables:
            - `{RUNS_ROOT_ENV}`
            - `{CORPUS_ROOT_ENV}`

            Or create a `.streamlit/secrets.toml` file with:
            ```toml
            [hrtse]
            runs_root = "runs"
            corpus_root = "data/toy"
            ```
            """
        )


if __name__ == "__main__":
    main()
