# modules/graph/__init__.py
from .descriptors import FactorArrays, FactorDescriptor, VertexDescriptor
from .evaluation import (FactorLinearization, Linearization, evaluate_residuals,
                         linearize, residual, total_error)
from .graph import Graph
from .loss import (LossKind, LossParams, apply_loss_weighting, default_loss,
                   huber_loss, rho, rho_prime)
from .plan import ActivePlan, SegmentedReduction, SlotPlan, activate
