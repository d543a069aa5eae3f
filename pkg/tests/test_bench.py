# tests/test_bench.py
import numpy as np
import pytest

from core.exceptions import ConfigurationError
from modules.bench import (ExperimentConfig, ExperimentService, compare_modes, generate_circle_problem,
                           relative_divergence, run_experiment)
from modules.graph import activate, total_error
from modules.linear_system import PCGConfig
from modules.optimizer import LMConfig


def _without_timings(report):
    report['summary'].pop('total_time')
    for record in report['trace']:
        record.pop('wall_time')
    return report


class TestCircleGenerator:

    def test_same_seed_gives_identical_points(self):
        a = generate_circle_problem(20, seed=9)
        b = generate_circle_problem(20, seed=9)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, generate_circle_problem(20, seed=10).points)

    def test_noise_free_points_lie_on_the_circle(self):
        problem = generate_circle_problem(30, radius=2.0, noise_sigma=0.0)
        np.testing.assert_allclose(np.hypot(problem.points[:, 0], problem.points[:, 1]), 2.0)
        assert total_error(problem.graph) < 1e-20

    def test_single_point(self):
        problem = generate_circle_problem(1)
        assert activate(problem.graph).total_free_dims == 2

    def test_no_points_is_rejected(self):
        with pytest.raises(ConfigurationError):
            generate_circle_problem(0)


class TestRunExperiment:

    def test_circle_report_layout(self):
        result = run_experiment(ExperimentConfig())
        report = result.to_dict()
        assert set(report) == {'schema_version', 'config', 'problem', 'summary', 'trace', 'memory_account'}
        assert report['summary']['metric'] == 'chi2'
        assert report['problem']['num_points'] == 50
        assert len(report['trace']) == result.report.iterations_run
        assert result.final_metric <= 0.1 * result.initial_metric

    def test_repeated_runs_agree_apart_from_timings(self):
        config = ExperimentConfig(lm=LMConfig(max_iterations=5))
        first = _without_timings(run_experiment(config).to_dict())
        second = _without_timings(run_experiment(config).to_dict())
        assert first == second

    def test_bal_experiment_reports_mse(self, tiny_bal_text, tmp_path):
        path = tmp_path / "tiny.txt"
        path.write_text(tiny_bal_text)
        config = ExperimentConfig(problem='bal', input_path=str(path), diff_mode='analytic',
                                  lm=LMConfig(max_iterations=5), pcg=PCGConfig(max_iterations=10))
        result = run_experiment(config)
        report = result.to_dict()
        assert result.metric == 'mse'
        assert 'metric_definition' in report['summary']
        assert report['problem']['num_observations'] == 3
        assert result.final_metric <= result.initial_metric

    def test_invalid_configuration(self):
        with pytest.raises(ConfigurationError, match="input file"):
            run_experiment(ExperimentConfig(problem='bal'))
        with pytest.raises(ConfigurationError, match="precision"):
            run_experiment(ExperimentConfig(precision='fp8'))

    def test_huber_and_fixed_point_options(self):
        config = ExperimentConfig(huber_delta=0.5, fix_last=True, level_demo=True)
        result = run_experiment(config)
        assert result.problem['free_dims'] == 98
        assert result.problem['residual_dims'] == 49


class TestModeComparison:

    def test_circle_modes_agree_and_dynamic_stores_nothing(self):
        comparison = compare_modes(ExperimentConfig(lm=LMConfig(max_iterations=5)))
        assert set(comparison.results) == {'analytic', 'auto', 'dynamic'}
        assert comparison.max_divergence('analytic', 'auto') <= 1e-6
        assert comparison.max_divergence('analytic', 'dynamic') <= 1e-6
        assert comparison.results['dynamic'].report.memory_accounting.jacobian_bytes == 0
        assert comparison.results['auto'].report.memory_accounting.jacobian_bytes > 0

    def test_relative_divergence(self):
        assert relative_divergence(0.0, 0.0) == 0.0
        assert relative_divergence(2.0, 1.0) == 0.5
        assert relative_divergence(0.0, 1.0) == float('inf')


class TestExperimentService:

    def test_missing_file_becomes_a_message(self, tmp_path):
        ok, message = ExperimentService().run(
            ExperimentConfig(problem='bal', input_path=str(tmp_path / "absent.txt")))
        assert not ok and "Cannot read input" in message

    def test_malformed_file_becomes_a_message(self, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("1 1 1\n0 0 1.0\n")
        ok, message = ExperimentService().run(ExperimentConfig(problem='bal', input_path=str(path)))
        assert not ok and "Malformed BAL file" in message

    def test_successful_run(self):
        ok, result = ExperimentService().run(ExperimentConfig(lm=LMConfig(max_iterations=2)))
        assert ok and result.report.iterations_run >= 1
