# modules/bal/camera.py
"""Snavely camera: angle-axis rotation, translation, focal length, two radial terms

Camera block layout is (r1, r2, r3, t1, t2, t3, f, k1, k2). The
component-wise functions accept numpy arrays or dual scalars; the batched
`*_jacobian` functions are the closed forms used in analytic mode.
"""
from typing import List, Sequence, Tuple

import numpy as np

from modules.differentiation.dual import cos, sin, sqrt, value_of, where


def _small_angle_mask(theta2) -> np.ndarray:
    value = np.asarray(value_of(theta2))
    dtype = value.dtype if np.issubdtype(value.dtype, np.floating) else np.float64
    return value <= np.finfo(dtype).eps


def _cross(a: Sequence, b: Sequence) -> List:
    return [a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]]


def rotate_point(rotation: Sequence, point: Sequence) -> List:
    """R(r)·X by Rodrigues' formula; X + r×X near θ = 0"""
    theta2 = rotation[0] * rotation[0] + rotation[1] * rotation[1] + rotation[2] * rotation[2]
    small = _small_angle_mask(theta2)
    theta = sqrt(where(small, 1.0, theta2))
    c, s = cos(theta), sin(theta)
    axis = [r / theta for r in rotation]
    axis_cross = _cross(axis, point)
    along = (axis[0] * point[0] + axis[1] * point[1] + axis[2] * point[2]) * (1.0 - c)
    full = [point[i] * c + axis_cross[i] * s + axis[i] * along for i in range(3)]

    r_cross = _cross(rotation, point)
    approx = [point[i] + r_cross[i] for i in range(3)]
    return [where(small, approx[i], full[i]) for i in range(3)]


def snavely_project(camera: Sequence, point: Sequence) -> List:
    """Predicted pixel f·d·p with p = −P_xy/P_z and d = 1 + k1‖p‖² + k2‖p‖⁴"""
    P = rotate_point(camera[0:3], point)
    P = [P[i] + camera[3 + i] for i in range(3)]
    xp = -P[0] / P[2]
    yp = -P[1] / P[2]
    f, k1, k2 = camera[6], camera[7], camera[8]
    n2 = xp * xp + yp * yp
    distortion = 1.0 + n2 * (k1 + k2 * n2)
    return [f * distortion * xp, f * distortion * yp]


def project(cameras: np.ndarray, points: np.ndarray) -> np.ndarray:
    """(m, 9) cameras and (m, 3) points -> (m, 2) predicted pixels"""
    cam = [cameras[:, j] for j in range(cameras.shape[1])]
    pt = [points[:, j] for j in range(points.shape[1])]
    with np.errstate(all='ignore'):
        return np.stack(snavely_project(cam, pt), axis=1)


def skew(v: np.ndarray) -> np.ndarray:
    """(m, 3) -> (m, 3, 3) cross-product matrices"""
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=v.dtype)
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def rotation_matrices(rotations: np.ndarray) -> np.ndarray:
    """(m, 3) angle-axis -> (m, 3, 3); I + [r]× near θ = 0"""
    dtype = rotations.dtype
    theta2 = np.einsum('mi,mi->m', rotations, rotations)
    small = theta2 <= np.finfo(dtype).eps
    theta = np.sqrt(np.where(small, 1.0, theta2)).astype(dtype)
    axis = rotations / theta[:, None]
    c, s = np.cos(theta)[:, None, None], np.sin(theta)[:, None, None]
    eye = np.eye(3, dtype=dtype)
    full = c * eye + s * skew(axis) + (1 - c) * np.einsum('mi,mj->mij', axis, axis)
    approx = eye + skew(rotations)
    return np.where(small[:, None, None], approx, full)


def rotation_jacobian(rotations: np.ndarray, points: np.ndarray, R: np.ndarray) -> np.ndarray:
    """∂(R(r)X)/∂r, (m, 3, 3)

    −R[X]×(r rᵀ + (Rᵀ − I)[r]×)/θ² away from zero, −[X]× near it.
    """
    dtype = rotations.dtype
    theta2 = np.einsum('mi,mi->m', rotations, rotations)
    small = theta2 <= np.finfo(dtype).eps
    safe = np.where(small, 1.0, theta2).astype(dtype)
    eye = np.eye(3, dtype=dtype)
    outer = np.einsum('mi,mj->mij', rotations, rotations)
    inner = outer + (np.swapaxes(R, 1, 2) - eye) @ skew(rotations)
    full = -(R @ skew(points) @ inner) / safe[:, None, None]
    return np.where(small[:, None, None], -skew(points), full)


def projection_jacobians(cameras: np.ndarray, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form (m, 2, 9) camera and (m, 2, 3) point Jacobians of the predicted pixel"""
    dtype = np.result_type(cameras.dtype, points.dtype)
    cameras = cameras.astype(dtype, copy=False)
    points = points.astype(dtype, copy=False)
    m = cameras.shape[0]
    rotations, translations = cameras[:, 0:3], cameras[:, 3:6]
    f, k1, k2 = cameras[:, 6], cameras[:, 7], cameras[:, 8]

    with np.errstate(all='ignore'):
        R = rotation_matrices(rotations)
        P = np.einsum('mij,mj->mi', R, points) + translations
        inv_z = 1.0 / P[:, 2]
        p = -P[:, :2] * inv_z[:, None]
        n2 = np.einsum('mi,mi->m', p, p)
        d = 1.0 + n2 * (k1 + k2 * n2)

        # ∂p/∂P
        dp_dP = np.zeros((m, 2, 3), dtype=dtype)
        dp_dP[:, 0, 0] = -inv_z
        dp_dP[:, 1, 1] = -inv_z
        dp_dP[:, :, 2] = P[:, :2] * (inv_z * inv_z)[:, None]

        # ∂pred/∂p = f(d·I + p·(∂d/∂p)ᵀ)
        dd_dp = 2.0 * (k1 + 2.0 * k2 * n2)[:, None] * p
        eye2 = np.eye(2, dtype=dtype)
        dpred_dp = f[:, None, None] * (d[:, None, None] * eye2 + np.einsum('mi,mj->mij', p, dd_dp))
        dpred_dP = dpred_dp @ dp_dP

        J_camera = np.empty((m, 2, 9), dtype=dtype)
        J_camera[:, :, 0:3] = dpred_dP @ rotation_jacobian(rotations, points, R)
        J_camera[:, :, 3:6] = dpred_dP
        J_camera[:, :, 6] = d[:, None] * p
        J_camera[:, :, 7] = (f * n2)[:, None] * p
        J_camera[:, :, 8] = (f * n2 * n2)[:, None] * p
        J_point = dpred_dP @ R
    return J_camera, J_point
