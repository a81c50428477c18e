# src/ui/components/navigation.py
"""Navigation component for the results browser."""

from typing import Dict, Optional

import streamlit as st

from src.config.constants import (
    APP_SETTINGS,
    CONVERGENCE_FILE,
    PAGES,
    REPORT_FILE,
    RESIDUALS_FILE,
    SURFACES_FILE,
    TRACE_FILE,
    VALIDATION_FILE,
    VALUE_FILE,
)

ARTIFACT_LABELS = {
    "surfaces": SURFACES_FILE,
    "convergence": CONVERGENCE_FILE,
    "value": VALUE_FILE,
    "residuals": RESIDUALS_FILE,
    "report": REPORT_FILE,
    "trace": TRACE_FILE,
    "validation": VALIDATION_FILE,
}


def render_navigation(artifacts: Dict[str, Optional[object]]) -> str:
    """Render navigation sidebar and return selected view."""
    st.sidebar.markdown(f"**{APP_SETTINGS['page_title']}**")

    nav_option = st.sidebar.radio("Navigation", list(PAGES))

    render_artifact_status(artifacts)
    return nav_option


def render_artifact_status(artifacts: Dict[str, Optional[object]]) -> None:
    """List which artifacts the output directory holds."""
    st.sidebar.markdown("---")
    st.sidebar.caption("Artifacts")
    for key, label in ARTIFACT_LABELS.items():
        marker = "✅" if artifacts.get(key) is not None else "❌"
        st.sidebar.text(f"{marker} {label}")
