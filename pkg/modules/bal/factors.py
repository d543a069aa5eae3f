# modules/bal/factors.py
from typing import List, Sequence

import numpy as np

from core.base_traits import ArrayVertexTraits, FactorTraits
from .camera import projection_jacobians, snavely_project
from .parser import CAMERA_DIMENSION, POINT_DIMENSION


class CameraTraits(ArrayVertexTraits):
    """9-parameter Snavely camera, additive update on all parameters"""

    def __init__(self):
        super().__init__(CAMERA_DIMENSION)


class PointTraits(ArrayVertexTraits):
    def __init__(self):
        super().__init__(POINT_DIMENSION)


class ReprojectionFactorTraits(FactorTraits):
    """Predicted minus observed pixel for a (camera, point) pair"""

    residual_dimension = 2
    observation_dimension = 2

    CAMERA_SLOT = 0
    POINT_SLOT = 1

    def error(self, slots: Sequence[Sequence], observation: np.ndarray, data: np.ndarray) -> List:
        camera, point = slots
        predicted = snavely_project(camera, point)
        return [predicted[0] - observation[:, 0], predicted[1] - observation[:, 1]]

    def analytic_jacobian(self, slots: Sequence[np.ndarray], observation: np.ndarray,
                          data: np.ndarray, slot: int) -> np.ndarray:
        camera, point = slots
        J_camera, J_point = projection_jacobians(camera, point)
        return J_camera if slot == self.CAMERA_SLOT else J_point
