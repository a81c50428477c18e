# src/ui/components/validation_view.py
"""Validation page."""

from typing import Dict, Optional

import pandas as pd
import streamlit as st


def render_validation_view(artifacts: Dict[str, Optional[object]]) -> None:
    """Render the pass/fail table of the last validate run."""
    st.markdown("### Validation")

    document = artifacts.get("validation")
    if not document:
        st.info("No validation.json in this directory. Run `python -m src.cli validate` first.")
        return

    checks = pd.DataFrame(document.get("checks", []))
    if checks.empty:
        st.warning("The validation run recorded no checks.")
        return

    passed = int(checks["passed"].sum())
    if document.get("passed"):
        st.success(f"All {len(checks)} checks passed")
    else:
        st.error(f"{len(checks) - passed} of {len(checks)} checks failed")
    st.dataframe(checks, use_container_width=True)
