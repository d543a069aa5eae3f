# modules/bench/views.py
import streamlit as st
import pandas as pd
from typing import Optional

from config.settings import SOLVER_DEFAULTS
from core.base_traits import DifferentiationMode
from core.precision import PRECISION_PRESETS
from modules.linear_system.pcg import PRECONDITIONERS, PCGConfig
from modules.optimizer.levenberg_marquardt import LMConfig
from shared.components import (format_bytes, labeled_tabs, render_download_buttons, render_metric,
                               render_placeholder, show_status)
from shared.exporters import divergence_dataframe, to_json, trace_dataframe
from shared.validators import validate_experiment_config
from .services import ExperimentConfig, ExperimentResult, ExperimentService, ModeComparison
import logging

logger = logging.getLogger(__name__)


class ExperimentView:
    """Configure, run and inspect one experiment family"""

    def __init__(self, module: str):
        self.module = module
        self.service = ExperimentService()
        self._init_session_state()

    def _init_session_state(self):
        """Initialize session state variables"""
        defaults = {
            f'{self.module}_result': None,
            f'{self.module}_comparison': None,
        }
        for key, value in defaults.items():
            if key not in st.session_state:
                st.session_state[key] = value

    def render(self):
        """Main render method"""
        titles = {
            'circle': "⭕ Circle Toy Problem",
            'bal': "📷 Bundle Adjustment",
            'compare': "⚖️ Differentiation Mode Comparison",
        }
        st.title(titles.get(self.module, self.module))

        config = self._render_form()
        if config is not None:
            errors = validate_experiment_config(config)
            if errors:
                for error in errors:
                    show_status('error', error)
            else:
                self._run(config)

        if self.module == 'compare':
            self._render_comparison(st.session_state[f'{self.module}_comparison'])
        else:
            self._render_result(st.session_state[f'{self.module}_result'])

    def _render_form(self) -> Optional[ExperimentConfig]:
        """Experiment settings; returns a config when submitted"""
        is_bal_default = self.module == 'bal'
        bal_defaults = SOLVER_DEFAULTS['bal']
        pcg_defaults = SOLVER_DEFAULTS['pcg']
        circle_defaults = SOLVER_DEFAULTS['circle']

        with st.form(f"{self.module}_form"):
            if self.module == 'compare':
                problem = st.selectbox("Problem", ['circle', 'bal'])
            else:
                problem = self.module

            col1, col2, col3 = st.columns(3)
            with col1:
                precision = st.selectbox("Precision", list(PRECISION_PRESETS))
            with col2:
                if self.module == 'compare':
                    diff_mode = DifferentiationMode.AUTO.value
                    st.caption("All three differentiation modes are run")
                else:
                    modes = [m.value for m in DifferentiationMode]
                    diff_mode = st.selectbox("Jacobians", modes,
                                             index=modes.index('analytic' if is_bal_default else 'auto'))
            with col3:
                preconditioner = st.selectbox("Preconditioner", list(PRECONDITIONERS))

            col1, col2, col3 = st.columns(3)
            with col1:
                max_iterations = st.number_input(
                    "LM iterations", min_value=1,
                    value=bal_defaults['max_iterations'] if is_bal_default else SOLVER_DEFAULTS['lm']['max_iterations'])
            with col2:
                pcg_iterations = st.number_input(
                    "PCG iterations", min_value=1,
                    value=bal_defaults['pcg_iterations'] if is_bal_default else pcg_defaults['max_iterations'])
            with col3:
                use_huber = st.checkbox("Huber loss")
                huber_delta = st.number_input("Huber δ", min_value=1e-6, value=1.0, format="%.4f")

            input_path, num_points, radius, noise_sigma, seed = None, 0, 1.0, 0.0, 0
            fix_last = level_demo = False
            if problem == 'bal' or self.module == 'compare':
                input_path = st.text_input("BAL file", help="Path or name inside the data directory")
            if problem == 'circle' or self.module == 'compare':
                col1, col2, col3, col4 = st.columns(4)
                with col1:
                    num_points = st.number_input("Points", min_value=1, value=circle_defaults['num_points'])
                with col2:
                    radius = st.number_input("Radius", min_value=1e-6, value=circle_defaults['radius'])
                with col3:
                    noise_sigma = st.number_input("Noise σ", min_value=0.0, value=circle_defaults['noise_sigma'])
                with col4:
                    seed = st.number_input("Seed", min_value=0, value=circle_defaults['seed'])
                fix_last = st.checkbox("Fix last point")
                level_demo = st.checkbox("Level out the first factor")

            submitted = st.form_submit_button("▶️ Run", type="primary")

        if not submitted:
            return None
        pcg = PCGConfig(max_iterations=int(pcg_iterations), preconditioner=preconditioner)
        return ExperimentConfig(
            problem=problem,
            input_path=input_path or None,
            precision=precision,
            diff_mode=diff_mode,
            lm=LMConfig(max_iterations=int(max_iterations), pcg=pcg),
            pcg=pcg,
            seed=int(seed),
            huber_delta=float(huber_delta) if use_huber else None,
            num_points=int(num_points),
            radius=float(radius),
            noise_sigma=float(noise_sigma),
            fix_last=fix_last,
            level_demo=level_demo,
        )

    def _run(self, config: ExperimentConfig):
        with st.spinner("Optimizing..."):
            if self.module == 'compare':
                success, outcome = self.service.compare(config)
                key = f'{self.module}_comparison'
            else:
                success, outcome = self.service.run(config)
                key = f'{self.module}_result'
        if success:
            st.session_state[key] = outcome
            show_status('success', "Experiment completed")
        else:
            show_status('error', outcome)

    def _render_result(self, result: Optional[ExperimentResult]):
        if result is None:
            render_placeholder("Run an experiment to see its report", "🧪")
            return
        report = result.report
        label = 'MSE' if result.metric == 'mse' else 'chi²'

        col1, col2, col3, col4 = st.columns(4)
        with col1:
            render_metric(f"Initial {label}", f"{result.initial_metric:.6g}")
        with col2:
            render_metric(f"Final {label}", f"{result.final_metric:.6g}",
                          delta=f"{result.final_metric - result.initial_metric:.3g}")
        with col3:
            render_metric("Iterations", f"{report.accepted_steps}/{report.iterations_run}",
                          help_text="accepted / run")
        with col4:
            render_metric("Time", f"{report.total_time:.2f} s", help_text=report.stop_reason)

        if report.stop_reason in ('non_finite_jacobian', 'damping_overflow'):
            show_status('warning', f"Run stopped early: {report.stop_reason}")

        table = trace_dataframe(result)
        trace_tab, memory_tab = labeled_tabs(["Iteration trace", "Memory account"], ["📋", "💾"])
        with trace_tab:
            st.dataframe(table, use_container_width=True, hide_index=True)

        with memory_tab:
            memory = report.memory_accounting
            st.dataframe(pd.DataFrame([
                {'component': 'Jacobians', 'bytes': memory.jacobian_bytes,
                 'size': format_bytes(memory.jacobian_bytes)},
                {'component': 'Preconditioner', 'bytes': memory.preconditioner_bytes,
                 'size': format_bytes(memory.preconditioner_bytes)},
                {'component': 'Workspace', 'bytes': memory.workspace_bytes,
                 'size': format_bytes(memory.workspace_bytes)},
                {'component': 'Graph', 'bytes': memory.graph_bytes, 'size': format_bytes(memory.graph_bytes)},
            ]), use_container_width=True, hide_index=True)
            show_status('info', "Byte counts are derived from element counts and widths, without allocator baseline")

        render_download_buttons(to_json(result.to_dict()), table,
                                f"{result.config.problem}_{result.config.precision}_{result.config.diff_mode}")

    def _render_comparison(self, comparison: Optional[ModeComparison]):
        if comparison is None:
            render_placeholder("Run a comparison to see the divergence table", "⚖️")
            return
        cols = st.columns(len(comparison.results))
        for col, (mode, result) in zip(cols, comparison.results.items()):
            with col:
                render_metric(f"{mode} final", f"{result.final_metric:.6g}",
                              help_text=f"Jacobian storage "
                                        f"{format_bytes(result.report.memory_accounting.jacobian_bytes)}")

        st.subheader("📋 Per-iteration divergence")
        table = divergence_dataframe(comparison)
        st.dataframe(table, use_container_width=True, hide_index=True)
        st.subheader("💾 Memory deltas")
        st.dataframe(pd.DataFrame(comparison.memory_deltas), use_container_width=True, hide_index=True)
        render_download_buttons(to_json(comparison.to_dict()), table, "mode_comparison")
