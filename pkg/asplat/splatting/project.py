# -*- coding: utf-8 -*-
"""
Проекция мировых 3D гауссианов на экран (аффинное приближение EWA) и ее обратный проход
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from ..core.config import Config
from ..models.camera import Camera, ScaleSet
from ..models.gaussians import Gaussian2D, Gaussian3D, GaussianParams, SplatBatch, SplatGrads, SymMat2

logger = logging.getLogger('Project')


def quaternion_to_rotation(q) -> np.ndarray:
    """
    Матрицы поворота из кватернионов (w, x, y, z); кватернионы нормализуются

    Args:
        q: (4,) или (N,4)

    Returns:
        (3,3) или (N,3,3)
    """
    q = np.asarray(q, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    r, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    rot = np.stack([
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - r * z), 2.0 * (x * z + r * y),
        2.0 * (x * y + r * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - r * x),
        2.0 * (x * z - r * y), 2.0 * (y * z + r * x), 1.0 - 2.0 * (x * x + y * y),
    ], axis=-1).reshape(-1, 3, 3)
    return rot[0] if single else rot


def cov3d(g: Gaussian3D) -> np.ndarray:
    """Σ = R·diag(exp(2·log_scales))·Rᵀ"""
    rot = quaternion_to_rotation(g.rotation)
    return rot @ np.diag(np.exp(2.0 * g.log_scales)) @ rot.T


def scale_camera(cam: Camera, s: Union[ScaleSet, float]) -> Camera:
    """
    Камера с разрешением, уменьшенным в factor раз

    Фокусы и главная точка делятся на factor, разрешение - целочисленное
    деление с округлением вниз. factor < 1 дает суперразрешение.
    """
    factor = s.factor if isinstance(s, ScaleSet) else ScaleSet(float(s)).factor
    if factor == 1:
        return Camera(cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height, cam.extrinsic.copy())
    return Camera(
        fx=cam.fx / factor, fy=cam.fy / factor, cx=cam.cx / factor, cy=cam.cy / factor,
        width=max(1, int(np.floor(cam.width / factor))),
        height=max(1, int(np.floor(cam.height / factor))),
        extrinsic=cam.extrinsic.copy(),
    )


@dataclass
class ProjectionCache:
    """Промежуточные величины проекции видимых гауссианов для обратного прохода"""

    count: int                 # общее число гауссианов
    visible: np.ndarray        # (M,) индексы видимых
    camera: Camera
    t_cam: np.ndarray          # (M,3)
    jacobian: np.ndarray       # (M,2,3)
    m: np.ndarray              # (M,2,3) J·W
    rotations: np.ndarray      # (M,3,3) R
    scales: np.ndarray         # (M,3)
    quaternions: np.ndarray    # (M,4) исходные (ненормализованные)
    cov3d: np.ndarray          # (M,3,3)
    opacity: np.ndarray        # (M,)


@dataclass
class Projection:
    """Результат проекции: экранные сплаты видимых гауссианов"""

    splats: SplatBatch
    visible: np.ndarray
    cache: ProjectionCache


def project_batch(params: Union[GaussianParams, Sequence[Gaussian3D]], cam: Camera,
                  z_near: Optional[float] = None) -> Projection:
    """
    Проекция набора гауссианов

    Гауссианы с z ≤ z_near в системе камеры отсекаются. J вычисляется в центре гауссиана.

    Args:
        params: Параметры гауссианов
        cam: Камера
        z_near: Ближняя плоскость (по умолчанию Config.Z_NEAR)
    """
    if not isinstance(params, GaussianParams):
        params = GaussianParams.from_gaussians(list(params))
    z_near = Config.Z_NEAR if z_near is None else z_near
    w = cam.rotation

    t_all = params.positions @ w.T + cam.translation
    visible = np.flatnonzero(t_all[:, 2] > z_near)
    t = t_all[visible]
    tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]

    means = np.stack([cam.fx * tx / tz + cam.cx, cam.fy * ty / tz + cam.cy], axis=-1)
    n = len(visible)
    jac = np.zeros((n, 2, 3))
    jac[:, 0, 0] = cam.fx / tz
    jac[:, 0, 2] = -cam.fx * tx / tz ** 2
    jac[:, 1, 1] = cam.fy / tz
    jac[:, 1, 2] = -cam.fy * ty / tz ** 2
    m = jac @ w

    rot = quaternion_to_rotation(params.rotations[visible]) if n else np.zeros((0, 3, 3))
    scales = np.exp(params.log_scales[visible])
    a = rot * scales[:, None, :]
    sigma3 = a @ a.transpose(0, 2, 1)
    sigma2 = m @ sigma3 @ m.transpose(0, 2, 1)
    cov = np.stack([sigma2[:, 0, 0], 0.5 * (sigma2[:, 0, 1] + sigma2[:, 1, 0]), sigma2[:, 1, 1]], axis=-1)

    opacity = expit(params.opacity_logits[visible])
    splats = SplatBatch(means, cov, opacity, params.colors[visible], tz)
    if n < len(params):
        logger.debug(f"Отсечено {len(params) - n} из {len(params)} гауссианов ближней плоскостью")
    cache = ProjectionCache(len(params), visible, cam, t, jac, m, rot, scales,
                            params.rotations[visible], sigma3, opacity)
    return Projection(splats, visible, cache)


def project_gaussian(g: Gaussian3D, cam: Camera) -> Optional[Gaussian2D]:
    """Проекция одного гауссиана; None, если он отсечен ближней плоскостью"""
    projection = project_batch([g], cam)
    if len(projection.visible) == 0:
        return None
    splats = projection.splats
    return Gaussian2D(splats.means[0], SymMat2.from_array(splats.cov[0]),
                      float(splats.opacity[0]), splats.color[0], float(splats.depth[0]))


def project_backward(cache: ProjectionCache, grads: SplatGrads) -> GaussianParams:
    """
    Градиенты по параметрам 3D гауссианов из градиентов по видимым экранным сплатам

    Args:
        cache: Кэш прямого прохода
        grads: Градиенты по (mean, cov, opacity, color) видимых сплатов;
            внедиагональный элемент cov агрегирует оба слота

    Returns:
        GaussianParams с градиентами (нули для отсеченных)
    """
    n_all = cache.count
    out = GaussianParams(np.zeros((n_all, 3)), np.zeros((n_all, 4)), np.zeros((n_all, 3)),
                         np.zeros(n_all), np.zeros((n_all, 3)))
    if len(cache.visible) == 0:
        return out
    cam = cache.camera
    w = cam.rotation
    tx, ty, tz = cache.t_cam[:, 0], cache.t_cam[:, 1], cache.t_cam[:, 2]

    g2 = np.empty((len(tx), 2, 2))
    g2[:, 0, 0] = grads.d_cov[:, 0]
    g2[:, 0, 1] = g2[:, 1, 0] = 0.5 * grads.d_cov[:, 1]
    g2[:, 1, 1] = grads.d_cov[:, 2]

    m = cache.m
    d_sigma3 = m.transpose(0, 2, 1) @ g2 @ m
    d_m = 2.0 * g2 @ m @ cache.cov3d
    d_j = d_m @ w.T

    d_t = np.zeros_like(cache.t_cam)
    d_t[:, 0] = grads.d_means[:, 0] * cam.fx / tz - d_j[:, 0, 2] * cam.fx / tz ** 2
    d_t[:, 1] = grads.d_means[:, 1] * cam.fy / tz - d_j[:, 1, 2] * cam.fy / tz ** 2
    d_t[:, 2] = (-grads.d_means[:, 0] * cam.fx * tx / tz ** 2
                 - grads.d_means[:, 1] * cam.fy * ty / tz ** 2
                 - d_j[:, 0, 0] * cam.fx / tz ** 2 + d_j[:, 0, 2] * 2.0 * cam.fx * tx / tz ** 3
                 - d_j[:, 1, 1] * cam.fy / tz ** 2 + d_j[:, 1, 2] * 2.0 * cam.fy * ty / tz ** 3)
    d_position = d_t @ w

    # Σ₃ = A·Aᵀ, A = R·S
    rot = cache.rotations
    s = cache.scales
    a = rot * s[:, None, :]
    d_a = 2.0 * d_sigma3 @ a
    d_rot = d_a * s[:, None, :]
    d_scale = np.sum(d_a * rot, axis=1)
    d_log_scales = d_scale * s

    d_quat = _rotation_backward(cache.quaternions, d_rot)

    vis = cache.visible
    out.positions[vis] = d_position
    out.rotations[vis] = d_quat
    out.log_scales[vis] = d_log_scales
    out.opacity_logits[vis] = grads.d_opacity * cache.opacity * (1.0 - cache.opacity)
    out.colors[vis] = grads.d_color
    return out


def _rotation_backward(quaternions: np.ndarray, d_rot: np.ndarray) -> np.ndarray:
    """Градиент по ненормализованному кватерниону из градиента по матрице поворота"""
    norm = np.linalg.norm(quaternions, axis=1, keepdims=True)
    q = quaternions / norm
    r, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    g = d_rot
    d_r = 2.0 * (z * (g[:, 1, 0] - g[:, 0, 1]) + y * (g[:, 0, 2] - g[:, 2, 0]) + x * (g[:, 2, 1] - g[:, 1, 2]))
    d_x = (2.0 * (y * (g[:, 0, 1] + g[:, 1, 0]) + z * (g[:, 0, 2] + g[:, 2, 0]) + r * (g[:, 2, 1] - g[:, 1, 2]))
           - 4.0 * x * (g[:, 1, 1] + g[:, 2, 2]))
    d_y = (2.0 * (x * (g[:, 0, 1] + g[:, 1, 0]) + r * (g[:, 0, 2] - g[:, 2, 0]) + z * (g[:, 1, 2] + g[:, 2, 1]))
           - 4.0 * y * (g[:, 0, 0] + g[:, 2, 2]))
    d_z = (2.0 * (r * (g[:, 1, 0] - g[:, 0, 1]) + x * (g[:, 0, 2] + g[:, 2, 0]) + y * (g[:, 1, 2] + g[:, 2, 1]))
           - 4.0 * z * (g[:, 0, 0] + g[:, 1, 1]))
    d_q = np.stack([d_r, d_x, d_y, d_z], axis=-1)
    return (d_q - q * np.sum(q * d_q, axis=1, keepdims=True)) / norm
