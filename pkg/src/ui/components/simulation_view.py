# src/ui/components/simulation_view.py
"""Simulation page: the loss report of the last simulate run."""

from typing import Dict, Optional

import streamlit as st

REPORT_METRICS = (
    ("combined", "Combined loss"),
    ("p_early", "P(early stop)"),
    ("e_late", "E lateness"),
    ("range_payoff", "Range payoff"),
    ("e_tau", "E tau"),
    ("mean_range", "E (S - I)"),
)


def render_simulation_view(artifacts: Dict[str, Optional[object]]) -> None:
    """Render the loss report and, when present, the path traces."""
    st.markdown("### Simulation")

    document = artifacts.get("report")
    if not document:
        st.info("No report.json in this directory. Run `python -m src.cli simulate` first.")
        return
    report = document.get("report", {})

    st.markdown(f"**Rule:** `{report.get('rule')}` over {report.get('n_paths')} paths, "
                f"dt {report.get('dt')}, horizon {report.get('horizon')}, seed {report.get('seed')}")

    shown = [(key, label) for key, label in REPORT_METRICS if report.get(key) is not None]
    columns = st.columns(max(len(shown), 1))
    for column, (key, label) in zip(columns, shown):
        with column:
            se = report.get(f"{key}_se")
            st.metric(label, f"{report[key]:.5f}", help=None if se is None else f"standard error {se:.2e}")

    censoring = report.get("censoring_rate", 0.0) or 0.0
    if censoring > 0:
        st.warning(f"{100.0 * censoring:.3f}% of paths reached the horizon")
    if report.get("identity_gap") is not None:
        st.caption(f"Direct minus transformed loss: {report['identity_gap']:.2e} "
                   f"(se {report.get('identity_gap_se', 0.0):.2e})")

    trace = artifacts.get("trace")
    if trace is not None:
        with st.expander("Path traces"):
            path = st.selectbox("Path", sorted(trace["path"].unique()), key="trace_path_select")
            st.dataframe(trace[trace["path"] == path].reset_index(drop=True), use_container_width=True)
