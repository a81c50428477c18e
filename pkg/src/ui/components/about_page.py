# src/ui/components/about_page.py
import streamlit as st


def render_about_page() -> None:
    """Render the About page with application information."""
    st.markdown("""
    # About Hidden Target Detection

    This browser shows the artifacts written by the command-line solver for the
    problem of stopping as close as possible to the moment a diffusion first
    reaches a hidden level.

    ## Pages

    ### Surfaces
    - **f\\* and g\\***: the extremal boundaries of the continuation set, one column at a time
    - **Convergence log**: diagonal starts used, residuals, curves that hit the opposite diagonal

    ### Value Function
    - **Value table**: V(i, x, s) with its region and, in C0, both evaluations
    - **Residuals**: generator, normal reflection and smooth fit checks

    ### Simulation
    - **Loss report**: early-stop probability, expected lateness and their sum
    - **Path traces**: region labels along sampled paths

    ### Validation
    - **Acceptance checks**: pass/fail table with measured values and thresholds

    ## Producing artifacts
    ```
    python -m src.cli surfaces --config configs/natural_scale.yaml --out output
    python -m src.cli value    --config configs/natural_scale.yaml --out output
    python -m src.cli simulate --config configs/natural_scale.yaml --out output
    python -m src.cli validate --config configs/natural_scale.yaml --out output
    ```

    ## Technical Details
    - Built with Streamlit and pandas
    - ODEs, quadrature and interpolation with SciPy
    - Monte Carlo with NumPy's Philox generator
    """)
