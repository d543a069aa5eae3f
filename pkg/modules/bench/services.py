# modules/bench/services.py
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Dict, List, Optional, Tuple, Union

from config.config import resolve_data_path
from config.settings import SOLVER_DEFAULTS
from core.base_traits import DifferentiationMode
from core.exceptions import BALFormatError, ConfigurationError, GraphOptError
from core.precision import precision_from_label
from modules.bal.parser import BALProblem, parse_bal
from modules.bal.services import build_graph, mse
from modules.graph.loss import huber_loss
from modules.linear_system.pcg import PCGConfig
from modules.optimizer.levenberg_marquardt import LMConfig, levenberg_marquardt
from modules.optimizer.report import SolveReport
from shared.validators import validate_experiment_config
from .circle import generate_circle_problem
import logging

logger = logging.getLogger(__name__)

_CIRCLE_DEFAULTS = SOLVER_DEFAULTS['circle']

REPORT_SCHEMA_VERSION = 1
MSE_DEFINITION = "sum over observations of squared 2D reprojection error / num_observations (pixels^2)"
MEMORY_NOTE = "analytic byte account from element counts and widths; no allocator baseline"


@dataclass
class ExperimentConfig:
    problem: str = 'circle'
    input_path: Optional[str] = None
    precision: str = 'fp64'
    diff_mode: str = DifferentiationMode.AUTO.value
    lm: LMConfig = field(default_factory=LMConfig)
    pcg: PCGConfig = field(default_factory=PCGConfig)
    seed: int = _CIRCLE_DEFAULTS['seed']
    huber_delta: Optional[float] = None
    output_path: Optional[str] = None
    output_format: str = 'json'
    num_points: int = _CIRCLE_DEFAULTS['num_points']
    radius: float = _CIRCLE_DEFAULTS['radius']
    noise_sigma: float = _CIRCLE_DEFAULTS['noise_sigma']
    fix_last: bool = False
    level_demo: bool = False

    @property
    def solver_config(self) -> LMConfig:
        """LM settings with this experiment's PCG settings attached"""
        return replace(self.lm, pcg=self.pcg)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['lm'].pop('pcg', None)
        return data


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: SolveReport
    problem: Dict
    metric: str                  # 'chi2' for the circle, 'mse' for BAL
    initial_metric: float
    final_metric: float

    def to_dict(self) -> Dict:
        report = self.report
        memory = report.memory_accounting.to_dict()
        memory['note'] = MEMORY_NOTE
        summary = {
            'metric': self.metric,
            'initial_metric': self.initial_metric,
            'final_metric': self.final_metric,
            'initial_chi2': report.initial_chi2,
            'final_chi2': report.final_chi2,
            'iterations_run': report.iterations_run,
            'accepted_steps': report.accepted_steps,
            'stop_reason': report.stop_reason,
            'total_time': report.total_time,
            'preconditioner_fallbacks': report.preconditioner_fallbacks,
        }
        if self.metric == 'mse':
            summary['metric_definition'] = MSE_DEFINITION
        return {
            'schema_version': REPORT_SCHEMA_VERSION,
            'config': self.config.to_dict(),
            'problem': self.problem,
            'summary': summary,
            'trace': [asdict(it) for it in report.iterations],
            'memory_account': memory,
        }


def load_bal_problem(path: str) -> BALProblem:
    return parse_bal(resolve_data_path(path))


def _check(config: ExperimentConfig) -> None:
    errors = validate_experiment_config(config)
    if errors:
        raise ConfigurationError("; ".join(errors))


def _run_circle(config: ExperimentConfig) -> ExperimentResult:
    precision = precision_from_label(config.precision)
    circle = generate_circle_problem(config.num_points, config.radius, config.noise_sigma,
                                     config.seed, precision, DifferentiationMode(config.diff_mode),
                                     config.fix_last, config.level_demo)
    if config.huber_delta is not None:
        for i in range(len(circle.factor_descriptor)):
            circle.factor_descriptor.set_loss(i, huber_loss(config.huber_delta))
    report = levenberg_marquardt(circle.graph, config.solver_config)
    problem = {
        'name': 'circle',
        'num_points': circle.num_points,
        'radius': circle.radius,
        'num_vertices': circle.graph.num_vertices,
        'num_factors': circle.graph.num_factors,
        'free_dims': report.free_dims,
        'residual_dims': report.residual_dims,
    }
    return ExperimentResult(config, report, problem, 'chi2', report.initial_chi2, report.final_chi2)


def _run_bal(config: ExperimentConfig, problem: Optional[BALProblem] = None) -> ExperimentResult:
    problem = problem or load_bal_problem(config.input_path)
    bal_graph = build_graph(problem, precision_from_label(config.precision),
                            DifferentiationMode(config.diff_mode), config.huber_delta)
    initial_mse = mse(bal_graph)
    report = levenberg_marquardt(bal_graph.graph, config.solver_config)
    final_mse = mse(bal_graph)
    logger.info(f"📉 MSE {initial_mse:.6f} → {final_mse:.6f}")
    summary = {
        'name': 'bal',
        'input': config.input_path,
        'num_cameras': problem.num_cameras,
        'num_points': problem.num_points,
        'num_observations': problem.num_observations,
        'free_dims': report.free_dims,
        'residual_dims': report.residual_dims,
    }
    return ExperimentResult(config, report, summary, 'mse', initial_mse, final_mse)


def run_experiment(config: ExperimentConfig, problem: Optional[BALProblem] = None) -> ExperimentResult:
    """Build the configured problem, solve it and collect the report

    Raises GraphOptError subclasses and OSError; a completed solve is a
    success whether or not it converged.
    """
    _check(config)
    logger.info(f"🧪 Running {config.problem} experiment: {config.precision}, {config.diff_mode}")
    if config.problem == 'circle':
        return _run_circle(config)
    return _run_bal(config, problem)


def relative_divergence(a: float, b: float) -> float:
    """|a − b| / |a|, 0 when both are 0"""
    if a == b:
        return 0.0
    if a == 0.0:
        return float('inf')
    return abs(a - b) / abs(a)


@dataclass
class ModeComparison:
    results: Dict[str, ExperimentResult]
    divergence: List[Dict]
    memory_deltas: List[Dict]

    def max_divergence(self, mode_a: str, mode_b: str) -> float:
        values = [row['relative_divergence'] for row in self.divergence
                  if row['mode_a'] == mode_a and row['mode_b'] == mode_b]
        return max(values) if values else 0.0

    def to_dict(self) -> Dict:
        return {
            'schema_version': REPORT_SCHEMA_VERSION,
            'results': {mode: result.to_dict() for mode, result in self.results.items()},
            'divergence': self.divergence,
            'memory_deltas': self.memory_deltas,
        }


def _state_trace(report: SolveReport) -> List[float]:
    return [report.initial_chi2] + report.chi2_trace


def compare_modes(config: ExperimentConfig) -> ModeComparison:
    """Run analytic, auto and dynamic under otherwise identical settings"""
    _check(config)
    problem = load_bal_problem(config.input_path) if config.problem == 'bal' else None
    results = {}
    for mode in DifferentiationMode:
        results[mode.value] = run_experiment(replace(config, diff_mode=mode.value), problem)

    divergence, memory_deltas = [], []
    for mode_a, mode_b in combinations(results, 2):
        trace_a = _state_trace(results[mode_a].report)
        trace_b = _state_trace(results[mode_b].report)
        for iteration, (chi2_a, chi2_b) in enumerate(zip(trace_a, trace_b)):
            divergence.append({
                'mode_a': mode_a,
                'mode_b': mode_b,
                'iteration': iteration,
                'chi2_a': chi2_a,
                'chi2_b': chi2_b,
                'relative_divergence': relative_divergence(chi2_a, chi2_b),
            })
        mem_a = results[mode_a].report.memory_accounting
        mem_b = results[mode_b].report.memory_accounting
        memory_deltas.append({
            'mode_a': mode_a,
            'mode_b': mode_b,
            'jacobian_bytes_delta': mem_b.jacobian_bytes - mem_a.jacobian_bytes,
            'total_bytes_delta': mem_b.total_bytes - mem_a.total_bytes,
            'final_metric_divergence': relative_divergence(results[mode_a].final_metric,
                                                           results[mode_b].final_metric),
        })
    return ModeComparison(results, divergence, memory_deltas)


class ExperimentService:
    """Service layer for the dashboard: errors become (False, message)"""

    def run(self, config: ExperimentConfig) -> Tuple[bool, Union[ExperimentResult, str]]:
        try:
            return True, run_experiment(config)
        except BALFormatError as e:
            logger.error(f"Malformed BAL file: {e}")
            return False, f"Malformed BAL file: {e}"
        except GraphOptError as e:
            logger.error(f"Experiment failed: {e}")
            return False, str(e)
        except OSError as e:
            logger.error(f"Cannot read input: {e}")
            return False, f"Cannot read input: {e}"

    def compare(self, config: ExperimentConfig) -> Tuple[bool, Union[ModeComparison, str]]:
        try:
            return True, compare_modes(config)
        except GraphOptError as e:
            logger.error(f"Mode comparison failed: {e}")
            return False, str(e)
        except OSError as e:
            logger.error(f"Cannot read input: {e}")
            return False, f"Cannot read input: {e}"
