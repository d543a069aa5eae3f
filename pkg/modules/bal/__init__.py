# modules/bal/__init__.py
from .camera import project, projection_jacobians, rotate_point, rotation_matrices, snavely_project
from .factors import CameraTraits, PointTraits, ReprojectionFactorTraits
from .parser import BALProblem, format_bal, parse_bal, parse_bal_text, write_bal
from .services import BALGraph, build_graph, mse, reprojection_residuals
