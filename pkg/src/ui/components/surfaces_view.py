# src/ui/components/surfaces_view.py
"""Surfaces page: the f*/g* table and the convergence log."""

from typing import Dict, Optional

import pandas as pd
import streamlit as st


def render_surfaces_view(artifacts: Dict[str, Optional[object]]) -> None:
    """Render the solved surfaces with their convergence diagnostics."""
    st.markdown("### Extremal Surfaces")

    surfaces = artifacts.get("surfaces")
    if surfaces is None:
        st.info("No surfaces.csv in this directory. Run `python -m src.cli surfaces` first.")
        return

    convergence = artifacts.get("convergence") or {}
    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Grid cells", len(surfaces))
    with col2:
        st.metric("Cells in C0", int(surfaces["in_C0"].sum()))
    with col3:
        st.metric("Monotonicity violations", convergence.get("monotonicity_violations", "n/a"))

    if convergence.get("caveat"):
        st.warning(convergence["caveat"])

    # Slices at a chosen s (for f*) or i (for g*)
    s_values = sorted(surfaces["s"].unique())
    chosen_s = st.select_slider("Column at s =", options=s_values, value=s_values[len(s_values) // 2],
                                key="surfaces_s_select")
    column = surfaces[surfaces["s"] == chosen_s][["i", "f_star", "g_star", "in_C0", "residual_f", "residual_g"]]
    st.dataframe(column.reset_index(drop=True), use_container_width=True)

    with st.expander("Convergence log"):
        provenance = convergence.get("provenance", {})
        for key, title in (("f_columns", "f* columns"), ("g_rows", "g* rows")):
            rows = provenance.get(key)
            if rows:
                st.markdown(f"**{title}**")
                st.dataframe(pd.DataFrame(rows), use_container_width=True)
        st.json({k: v for k, v in convergence.items() if k not in ("provenance", "config")})
