# shared/validators.py
from typing import List

from core.base_traits import DifferentiationMode
from core.precision import PRECISION_PRESETS

PROBLEMS = ('circle', 'bal')
OUTPUT_FORMATS = ('json', 'csv')


def validate_experiment_config(config) -> List[str]:
    """Return human-readable problems with an experiment configuration; empty when valid"""
    errors = []
    if config.problem not in PROBLEMS:
        errors.append(f"Unknown problem '{config.problem}', expected one of {list(PROBLEMS)}")
    if config.precision not in PRECISION_PRESETS:
        errors.append(f"Unknown precision '{config.precision}', expected one of {sorted(PRECISION_PRESETS)}")
    if config.diff_mode not in {m.value for m in DifferentiationMode}:
        errors.append(f"Unknown differentiation mode '{config.diff_mode}'")
    if config.problem == 'bal' and not config.input_path:
        errors.append("A BAL experiment needs an input file")
    if config.huber_delta is not None and not config.huber_delta > 0:
        errors.append(f"Huber delta must be positive, got {config.huber_delta}")
    if config.problem == 'circle':
        if config.num_points < 1:
            errors.append(f"Circle problem needs at least one point, got {config.num_points}")
        if not config.radius > 0:
            errors.append(f"Circle radius must be positive, got {config.radius}")
        if config.noise_sigma < 0:
            errors.append(f"Noise sigma must be non-negative, got {config.noise_sigma}")
    if config.output_format not in OUTPUT_FORMATS:
        errors.append(f"Unknown output format '{config.output_format}'")
    if not 0 <= config.seed < 2 ** 64:
        errors.append(f"Seed must be a 64-bit unsigned integer, got {config.seed}")
    return errors
