# shared/exporters.py
import json
import math
import os
from typing import Any, Dict, List

import pandas as pd

import logging

logger = logging.getLogger(__name__)

# Fixed CSV column order, one row per LM iteration
TRACE_COLUMNS = [
    'problem', 'precision', 'diff_mode', 'iteration', 'chi2_before', 'chi2_after', 'damping',
    'pcg_iterations', 'pcg_converged', 'pcg_relative_residual', 'accepted', 'gain_ratio',
    'low_quality', 'wall_time',
]

DIVERGENCE_COLUMNS = ['mode_a', 'mode_b', 'iteration', 'chi2_a', 'chi2_b', 'relative_divergence']


def sanitize(value: Any) -> Any:
    """Replace non-finite floats with None so the JSON stays standard"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: sanitize(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(item) for item in value]
    if hasattr(value, 'item') and not isinstance(value, (str, bytes)):
        return sanitize(value.item())
    return value


def to_json(report: Dict, indent: int = 2) -> str:
    return json.dumps(sanitize(report), indent=indent, allow_nan=False)


def trace_dataframe(result) -> pd.DataFrame:
    """Per-iteration trace of an experiment result as a table"""
    config = result.config
    rows: List[Dict] = []
    for record in result.to_dict()['trace']:
        row = {'problem': config.problem, 'precision': config.precision,
               'diff_mode': config.diff_mode}
        row.update(record)
        rows.append(row)
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def divergence_dataframe(comparison) -> pd.DataFrame:
    return pd.DataFrame(comparison.divergence, columns=DIVERGENCE_COLUMNS)


def render_report(result, output_format: str = 'json') -> str:
    if output_format == 'csv':
        return trace_dataframe(result).to_csv(index=False)
    return to_json(result.to_dict())


def write_report(result, path: str, output_format: str = 'json') -> str:
    """Write an experiment report to `path`, creating its directory"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(render_report(result, output_format))
    logger.info(f"💾 Report written to {path}")
    return path


def write_comparison(comparison, path: str, output_format: str = 'json') -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        if output_format == 'csv':
            handle.write(divergence_dataframe(comparison).to_csv(index=False))
        else:
            handle.write(to_json(comparison.to_dict()))
    logger.info(f"💾 Mode comparison written to {path}")
    return path
