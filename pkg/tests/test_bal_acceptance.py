# tests/test_bal_acceptance.py
"""Desk-scale runs on published BAL problems; skipped unless the files are in GRAPHOPT_DATA_DIR"""
import os

import pytest

from config.config import DATA_DIR
from modules.bal import parse_bal
from modules.bench import ExperimentConfig, compare_modes, run_experiment
from modules.linear_system import PCGConfig
from modules.optimizer import LMConfig

pytestmark = pytest.mark.bal

LADYBUG = 'problem-49-7776-pre.txt'
DUBROVNIK = 'problem-16-22106-pre.txt'
TRAFALGAR = 'problem-21-11315-pre.txt'


def find_problem(name: str) -> str:
    for suffix in ('', '.bz2', '.gz'):
        path = os.path.join(DATA_DIR, name + suffix)
        if os.path.exists(path):
            return path
    pytest.skip(f"{name} not found in {DATA_DIR}")


def bal_config(path: str, precision: str = 'fp64', diff_mode: str = 'analytic') -> ExperimentConfig:
    pcg = PCGConfig(max_iterations=10, tolerance=1e-6)
    return ExperimentConfig(problem='bal', input_path=path, precision=precision, diff_mode=diff_mode,
                            lm=LMConfig(max_iterations=50, pcg=pcg), pcg=pcg)


def test_ladybug_header():
    problem = parse_bal(find_problem(LADYBUG))
    assert (problem.num_cameras, problem.num_points, problem.num_observations) == (49, 7776, 31843)


def test_ladybug_binary64_analytic():
    result = run_experiment(bal_config(find_problem(LADYBUG)))
    assert result.final_metric <= 0.90


def test_dubrovnik_all_precisions():
    path = find_problem(DUBROVNIK)
    finals = {p: run_experiment(bal_config(path, p)).final_metric for p in ('fp64', 'fp32', 'fp32-bf16')}
    assert all(value <= 0.46 for value in finals.values())
    for label in ('fp32', 'fp32-bf16'):
        assert abs(finals[label] - finals['fp64']) <= 0.05 * finals['fp64']


def test_trafalgar():
    result = run_experiment(bal_config(find_problem(TRAFALGAR)))
    assert result.final_metric <= 1.75


def test_ladybug_differentiation_modes_agree():
    comparison = compare_modes(bal_config(find_problem(LADYBUG)))
    finals = [result.final_metric for result in comparison.results.values()]
    for a in finals:
        for b in finals:
            assert abs(a - b) <= 0.01 * a
    assert comparison.max_divergence('analytic', 'auto') <= 1e-6
