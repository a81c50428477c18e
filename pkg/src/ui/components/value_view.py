# src/ui/components/value_view.py
"""Value function page."""

from typing import Dict, Optional

import pandas as pd
import streamlit as st


def render_value_view(artifacts: Dict[str, Optional[object]]) -> None:
    """Render the value table and the free-boundary residuals."""
    st.markdown("### Value Function")

    value = artifacts.get("value")
    if value is None:
        st.info("No value.csv in this directory. Run `python -m src.cli value` first.")
        return

    regions = ["All"] + sorted(value["region"].dropna().unique())
    region = st.selectbox("Region", regions, key="value_region_select")
    shown = value if region == "All" else value[value["region"] == region]
    st.dataframe(shown.reset_index(drop=True), use_container_width=True)

    origin = value[(value["i"] == 0.0) & (value["x"] == 0.0) & (value["s"] == 0.0)]
    if not origin.empty:
        col1, col2 = st.columns(2)
        with col1:
            st.metric("V(0, 0, 0)", f"{origin['value'].iloc[0]:.6f}")
        with col2:
            gap = origin["c0_gap"].iloc[0]
            st.metric("C0 cross-form gap", "n/a" if pd.isna(gap) else f"{gap:.2e}")

    residuals = artifacts.get("residuals")
    if residuals:
        st.markdown("#### Free-boundary residuals")
        frame = pd.DataFrame(sorted(residuals.get("residuals", {}).items()), columns=["condition", "max residual"])
        st.dataframe(frame, use_container_width=True)
        st.caption(f"{residuals.get('sample_size', 0)} sample points, step {residuals.get('fd_step')}")
