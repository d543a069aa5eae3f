# modules/bench/__init__.py
from .circle import (CircleFactorTraits, CircleProblem, Point2DTraits, generate_circle_problem,
                     sample_circle_points)
from .services import (ExperimentConfig, ExperimentResult, ExperimentService, ModeComparison,
                       compare_modes, relative_divergence, run_experiment)
