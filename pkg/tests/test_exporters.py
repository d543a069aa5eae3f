# tests/test_exporters.py
import io
import json

import numpy as np
import pandas as pd

from modules.bench import ExperimentConfig, compare_modes, run_experiment
from modules.optimizer import LMConfig
from shared.exporters import (DIVERGENCE_COLUMNS, TRACE_COLUMNS, render_report, sanitize, to_json,
                              write_comparison, write_report)


def test_non_finite_values_become_null():
    text = to_json({'a': float('nan'), 'b': [1.0, float('inf')], 'c': np.float64(2.5), 'd': np.int64(3)})
    assert json.loads(text) == {'a': None, 'b': [1.0, None], 'c': 2.5, 'd': 3}
    assert sanitize((np.bool_(True),)) == [True]


def test_csv_trace_has_fixed_columns():
    result = run_experiment(ExperimentConfig(lm=LMConfig(max_iterations=3)))
    table = pd.read_csv(io.StringIO(render_report(result, 'csv')))
    assert list(table.columns) == TRACE_COLUMNS
    assert len(table) == result.report.iterations_run
    assert (table['problem'] == 'circle').all()


def test_reports_are_written_to_new_directories(tmp_path):
    result = run_experiment(ExperimentConfig(lm=LMConfig(max_iterations=2)))
    path = tmp_path / "nested" / "run.json"
    write_report(result, str(path))
    assert json.loads(path.read_text())['summary']['metric'] == 'chi2'

    comparison = compare_modes(ExperimentConfig(lm=LMConfig(max_iterations=2)))
    csv_path = tmp_path / "modes.csv"
    write_comparison(comparison, str(csv_path), 'csv')
    assert list(pd.read_csv(csv_path).columns) == DIVERGENCE_COLUMNS
