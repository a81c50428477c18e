import streamlit as st

from src.config.constants import APP_SETTINGS, DEFAULT_OUTPUT_DIR, PAGES
from src.data.loader import load_artifacts
from src.ui.components.about_page import render_about_page
from src.ui.components.navigation import render_navigation
from src.ui.components.simulation_view import render_simulation_view
from src.ui.components.surfaces_view import render_surfaces_view
from src.ui.components.validation_view import render_validation_view
from src.ui.components.value_view import render_value_view


@st.cache_data(show_spinner=False)
def cached_artifacts(output_dir: str) -> dict:
    return load_artifacts(output_dir)


def initialize_session_state():
    """Initialize session state variables."""
    if 'output_dir' not in st.session_state:
        st.session_state.output_dir = str(DEFAULT_OUTPUT_DIR)


def main():
    """Main application entry point."""
    st.set_page_config(**APP_SETTINGS)
    initialize_session_state()

    output_dir = st.sidebar.text_input("Output directory", value=st.session_state.output_dir, key="output_dir_input")
    if output_dir != st.session_state.output_dir:
        st.session_state.output_dir = output_dir
        st.rerun()
    if st.sidebar.button("Reload artifacts"):
        cached_artifacts.clear()

    try:
        artifacts = cached_artifacts(st.session_state.output_dir)
    except Exception as e:
        st.error(f"Error loading artifacts: {str(e)}")
        return

    nav_option = render_navigation(artifacts)

    if nav_option == PAGES[0]:
        render_surfaces_view(artifacts)
    elif nav_option == PAGES[1]:
        render_value_view(artifacts)
    elif nav_option == PAGES[2]:
        render_simulation_view(artifacts)
    elif nav_option == PAGES[3]:
        render_validation_view(artifacts)
    else:  # About
        render_about_page()


if __name__ == "__main__":
    main()
