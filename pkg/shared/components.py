# shared/components.py
import streamlit as st
from typing import Any, List, Optional, Sequence

import pandas as pd

_STATUS_STYLES = {
    'success': (st.success, "✅"),
    'error': (st.error, "❌"),
    'warning': (st.warning, "⚠️"),
    'info': (st.info, "ℹ️"),
}


def show_status(kind: str, message: str) -> None:
    """Status banner; kind is one of success, error, warning, info"""
    render, icon = _STATUS_STYLES[kind]
    render(f"{icon} {message}")


def render_metric(label: str, value: Any, delta: Optional[Any] = None,
                  help_text: Optional[str] = None) -> None:
    # lower is better for every solver metric shown
    st.metric(label=label, value=value, delta=delta, delta_color="inverse", help=help_text)


def render_download_buttons(json_text: str, table: pd.DataFrame, basename: str = "report") -> None:
    """JSON report and CSV trace download buttons side by side"""
    json_col, csv_col = st.columns(2)
    json_col.download_button("📥 Download JSON", data=json_text,
                             file_name=f"{basename}.json", mime="application/json")
    csv_col.download_button("📥 Download CSV", data=table.to_csv(index=False),
                            file_name=f"{basename}.csv", mime="text/csv")


def render_placeholder(message: str, icon: str) -> None:
    """Centered hint shown before a run has produced anything"""
    st.markdown(f"<div style='text-align:center;padding:3rem;color:#666'>"
                f"<h1>{icon}</h1><h3>{message}</h3></div>", unsafe_allow_html=True)


def labeled_tabs(names: Sequence[str], icons: Sequence[str]) -> List:
    return st.tabs([f"{icon} {name}" for icon, name in zip(icons, names)])


def format_bytes(count: int) -> str:
    for unit in ('B', 'KiB', 'MiB'):
        if count < 1024:
            return f"{count:.0f} {unit}" if unit == 'B' else f"{count:.1f} {unit}"
        count /= 1024
    return f"{count:.1f} GiB"
