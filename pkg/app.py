# app.py
import os

import streamlit as st
from config.config import DATA_DIR, OUTPUT_DIR, WORKERS, configure_logging
from config.settings import APP_CONFIG
from modules.bench.views import ExperimentView
import logging

configure_logging()
logger = logging.getLogger(__name__)

st.set_page_config(page_title=APP_CONFIG['title'], page_icon=APP_CONFIG['icon'], layout="wide")

BAL_SUFFIXES = ('.txt', '.txt.gz', '.txt.bz2')


def list_bal_files():
    """BAL problems available under DATA_DIR, by file name"""
    if not os.path.isdir(DATA_DIR):
        return []
    return sorted(name for name in os.listdir(DATA_DIR) if name.endswith(BAL_SUFFIXES))


def render_sidebar():
    """Experiment picker plus the runtime environment the solver will use"""
    modules = {key: spec for key, spec in APP_CONFIG['modules'].items() if spec['enabled']}
    with st.sidebar:
        st.title(f"{APP_CONFIG['icon']} {APP_CONFIG['title']}")
        if not modules:
            st.error("No experiments enabled")
            return None

        keys = list(modules)
        selected = st.radio("Experiment", keys,
                            format_func=lambda key: f"{modules[key]['icon']} {modules[key]['name']}")
        st.caption(modules[selected]['description'])

        st.divider()
        st.markdown("**Runtime**")
        st.caption(f"Workers: {WORKERS}")
        st.caption(f"Reports: {OUTPUT_DIR}")
        files = list_bal_files()
        if files:
            with st.expander(f"BAL files in {DATA_DIR} ({len(files)})"):
                st.write("\n".join(f"- {name}" for name in files))
        else:
            st.caption(f"No BAL files in {DATA_DIR}")
    return selected


def main():
    selected = render_sidebar()
    if selected is None:
        return
    logger.debug(f"Rendering experiment view {selected}")
    ExperimentView(selected).render()
    st.caption(f"{APP_CONFIG['title']} v{APP_CONFIG['version']}")


if __name__ == "__main__":
    main()
