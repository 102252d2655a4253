"""HR-TSE run browser - Streamlit app for training curves, ablation tables and listening tests."""
