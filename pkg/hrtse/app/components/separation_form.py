"""Form for picking a mixture and fusion mode to listen to."""

from dataclasses import dataclass

import streamlit as st

from hrtse.config import MODES
from hrtse.data.manifest import Manifest


@dataclass
class SeparationRequest:
    """Data from separation form submission."""

    mixture_id: str
    mode: str
    split: str

    def is_valid(self, manifest: Manifest) -> tuple[bool, list[str]]:
        """Validate form data.

        Returns:
            Tuple of (is_valid, list of error messages)
        """
        errors = []

        if self.mode not in MODES:
            errors.append(f"Mode must be one of {', '.join(MODES)}")

        if not any(m.mixture_id == self.mixture_id for m in manifest.mixtures):
            errors.append(f"Unknown mixture {self.mixture_id!r}")

        return len(errors) == 0, errors


def separation_form(
    manifest: Manifest,
    default_mode: str = "hr",
    key_prefix: str = "separation_form",
) -> SeparationRequest | None:
    """Render mixture/mode selection.

    Args:
        manifest: Corpus manifest to pick mixtures from
        default_mode: Mode preselected in the radio
        key_prefix: Unique prefix for widget keys

    Returns:
        SeparationRequest if submitted, None otherwise
    """
    splits = sorted({m.split for m in manifest.mixtures})
    col1, col2 = st.columns(2)
    with col1:
        split = st.selectbox("Split", options=splits, index=splits.index("val") if "val" in splits else 0, key=f"{key_prefix}_split")
    with col2:
        mode = st.radio(
            "Fusion mode",
            options=list(MODES),
            index=list(MODES).index(default_mode),
            horizontal=True,
            key=f"{key_prefix}_mode",
        )

    mixture_ids = [m.mixture_id for m in manifest.split_mixtures(split)]
    if not mixture_ids:
        st.info(f"No mixtures in split {split!r}")
        return None
    mixture_id = st.selectbox("Mixture", options=mixture_ids, key=f"{key_prefix}_mixture")

    if st.button("Separate", type="primary", key=f"{key_prefix}_submit"):
        return SeparationRequest(mixture_id=mixture_id, mode=mode, split=split)

    return None
