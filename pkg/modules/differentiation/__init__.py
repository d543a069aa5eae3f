# modules/differentiation/__init__.py
from core.base_traits import DifferentiationMode
from .dual import (DualScalar, abs_, atan2, cos, dual_eval, exp, log, maximum,
                   minimum, sin, sqrt, value_of, where)
from .jacobians import (DynamicJacobians, JacobianStore, StoredJacobians,
                        evaluate_blocks, jacobian_analytic, jacobian_auto,
                        materialize_jacobians)
