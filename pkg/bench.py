# bench.py
"""Command-line harness: run circle or BAL experiments and emit a report

    python bench.py --problem circle --precision fp64 --diff auto
    python bench.py --problem bal --input problem-49-7776-pre.txt.bz2 --diff analytic --output reports/ladybug.json
"""
import argparse
import sys
from typing import List, Optional

from config.config import WORKERS, configure_logging, resolve_output_path
from config.settings import SOLVER_DEFAULTS
from core.base_traits import DifferentiationMode
from core.exceptions import BALFormatError, ConfigurationError, GraphError, GraphOptError
from core.precision import PRECISION_PRESETS
from modules.bench.services import ExperimentConfig, compare_modes, run_experiment
from modules.linear_system.pcg import NORMALIZATIONS, PRECONDITIONERS, PCGConfig
from modules.optimizer.levenberg_marquardt import LMConfig
from shared.exporters import divergence_dataframe, render_report, to_json, write_comparison, write_report
import logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BAL_FORMAT = 4
EXIT_CONFIGURATION = 5
EXIT_SOLVER = 6


def build_parser() -> argparse.ArgumentParser:
    pcg = SOLVER_DEFAULTS['pcg']
    circle = SOLVER_DEFAULTS['circle']
    parser = argparse.ArgumentParser(description="Sparse nonlinear least-squares benchmark harness")
    parser.add_argument('--problem', choices=['circle', 'bal'], default='circle')
    parser.add_argument('--input', help="BAL problem file (plain, gzip or bzip2)")
    parser.add_argument('--precision', choices=sorted(PRECISION_PRESETS), default='fp64')
    parser.add_argument('--diff', choices=[m.value for m in DifferentiationMode],
                        default=DifferentiationMode.AUTO.value)
    parser.add_argument('--max-iters', type=int, default=None,
                        help=f"LM iterations (default {SOLVER_DEFAULTS['lm']['max_iterations']} circle, "
                             f"{SOLVER_DEFAULTS['bal']['max_iterations']} BAL)")
    parser.add_argument('--pcg-iters', type=int, default=None,
                        help=f"PCG iterations (default {pcg['max_iterations']} circle, "
                             f"{SOLVER_DEFAULTS['bal']['pcg_iterations']} BAL)")
    parser.add_argument('--pcg-tol', type=float, default=pcg['tolerance'])
    parser.add_argument('--rejection-ratio', type=float, default=pcg['rejection_ratio'])
    parser.add_argument('--preconditioner', choices=PRECONDITIONERS, default=pcg['preconditioner'])
    parser.add_argument('--normalization', choices=NORMALIZATIONS, default=pcg['normalization'])
    parser.add_argument('--huber', type=float, default=None, metavar='DELTA')
    parser.add_argument('--seed', type=int, default=circle['seed'])
    parser.add_argument('--num-points', type=int, default=circle['num_points'])
    parser.add_argument('--radius', type=float, default=circle['radius'])
    parser.add_argument('--noise-sigma', type=float, default=circle['noise_sigma'])
    parser.add_argument('--fix-last', action='store_true')
    parser.add_argument('--level-demo', action='store_true')
    parser.add_argument('--relinearize-every-iteration', action='store_true')
    parser.add_argument('--workers', type=int, default=WORKERS)
    parser.add_argument('--compare-modes', action='store_true',
                        help="Run analytic, auto and dynamic and report their divergence")
    parser.add_argument('--output', default=None,
                        help="Report path; bare names go to GRAPHOPT_OUTPUT_DIR (stdout when omitted)")
    parser.add_argument('--format', choices=['json', 'csv'], default='json')
    parser.add_argument('--log-level', default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    is_bal = args.problem == 'bal'
    bal = SOLVER_DEFAULTS['bal']
    lm_default = bal['max_iterations'] if is_bal else SOLVER_DEFAULTS['lm']['max_iterations']
    pcg_default = bal['pcg_iterations'] if is_bal else SOLVER_DEFAULTS['pcg']['max_iterations']
    # explicit zeros must reach config validation
    max_iters = args.max_iters if args.max_iters is not None else lm_default
    pcg_iters = args.pcg_iters if args.pcg_iters is not None else pcg_default
    pcg = PCGConfig(max_iterations=pcg_iters, tolerance=args.pcg_tol,
                    rejection_ratio=args.rejection_ratio, preconditioner=args.preconditioner,
                    normalization=args.normalization)
    lm = LMConfig(max_iterations=max_iters, pcg=pcg, workers=args.workers,
                  relinearize_every_iteration=args.relinearize_every_iteration)
    return ExperimentConfig(
        problem=args.problem,
        input_path=args.input,
        precision=args.precision,
        diff_mode=args.diff,
        lm=lm,
        pcg=pcg,
        seed=args.seed,
        huber_delta=args.huber,
        output_path=resolve_output_path(args.output) if args.output else None,
        output_format=args.format,
        num_points=args.num_points,
        radius=args.radius,
        noise_sigma=args.noise_sigma,
        fix_last=args.fix_last,
        level_demo=args.level_demo,
    )


def _emit(config: ExperimentConfig, compare: bool) -> None:
    if compare:
        comparison = compare_modes(config)
        if config.output_path:
            write_comparison(comparison, config.output_path, config.output_format)
        elif config.output_format == 'csv':
            sys.stdout.write(divergence_dataframe(comparison).to_csv(index=False))
        else:
            sys.stdout.write(to_json(comparison.to_dict()) + "\n")
        return
    result = run_experiment(config)
    if config.output_path:
        write_report(result, config.output_path, config.output_format)
    else:
        sys.stdout.write(render_report(result, config.output_format) + "\n")
    logger.info(f"✅ {result.metric}: {result.initial_metric:.6g} → {result.final_metric:.6g} "
                f"({result.report.stop_reason})")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = config_from_args(args)
        _emit(config, args.compare_modes)
    except BALFormatError as e:
        logger.error(f"❌ Malformed BAL file: {e}")
        return EXIT_BAL_FORMAT
    except (ConfigurationError, GraphError) as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return EXIT_CONFIGURATION
    except GraphOptError as e:
        logger.error(f"❌ Solver aborted: {e}")
        return EXIT_SOLVER
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
        return EXIT_IO
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
