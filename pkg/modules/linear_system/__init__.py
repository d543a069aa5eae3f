# modules/linear_system/__init__.py
from .normal_equations import (HessianOperator, NormalEquations, accumulate_gradient_and_diagonal,
                               accumulate_normal_equations, clamp_diagonal, compute_column_scaling,
                               damping_vector, hessian_vector_product, unscale_step)
from .pcg import PCGConfig, PCGStats, pcg_solve
from .preconditioner import (BlockJacobiPreconditioner, IdentityPreconditioner,
                             build_preconditioner, invert_blocks)
