# -*- coding: utf-8 -*-
"""
Целевые изображения: многомасштабные цели, синтетические картинки, начальная сцена
"""

import logging
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DomainError
from ..models.camera import Camera, ScaleSet
from ..models.gaussians import GaussianParams
from ..models.image import Image

logger = logging.getLogger('Targets')

# Параметр ядра Catmull-Rom
CUBIC_A = -0.5


def make_rng(seed: int) -> np.random.Generator:
    """Генератор на счетчиковом битовом генераторе Philox"""
    return np.random.Generator(np.random.Philox(int(seed)))


def cubic_kernel(x, a: float = CUBIC_A) -> np.ndarray:
    """Бикубическое ядро Keys (a = -0.5 - Catmull-Rom)"""
    x = np.abs(np.asarray(x, dtype=np.float64))
    near = ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    far = ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _resample_matrix(size_in: int, factor: float) -> np.ndarray:
    """Матрица (size_out, size_in) бикубического уменьшения с расширенным в factor раз ядром"""
    size_out = max(1, int(np.floor(size_in / factor)))
    support = 2.0 * max(factor, 1.0)
    centers = (np.arange(size_out) + 0.5) * factor - 0.5
    matrix = np.zeros((size_out, size_in))
    for i, center in enumerate(centers):
        taps = np.arange(int(np.floor(center - support)), int(np.ceil(center + support)) + 1)
        weights = cubic_kernel((taps - center) / max(factor, 1.0))
        weights /= weights.sum()
        np.add.at(matrix[i], np.clip(taps, 0, size_in - 1), weights)
    return matrix


def bicubic_downsample(image: Image, factor: float) -> Image:
    """Бикубическое уменьшение с антиалиасингом, размер - округление вниз"""
    if factor == 1:
        return image.copy()
    if not factor > 0:
        raise DomainError(f"Множитель уменьшения должен быть положительным, получено {factor}")
    rows = _resample_matrix(image.height, factor)
    cols = _resample_matrix(image.width, factor)
    pixels = np.einsum('ij,jkc,lk->ilc', rows, image.pixels, cols)
    return Image(pixels)


def box_downsample(image: Image, factor: int) -> Image:
    """Усреднение блоков factor×factor; остаток по краям отбрасывается"""
    factor = int(factor)
    if factor < 1:
        raise DomainError(f"Множитель уменьшения должен быть ≥ 1, получено {factor}")
    h = image.height // factor
    w = image.width // factor
    if h == 0 or w == 0:
        raise DomainError(f"Изображение {image.width}x{image.height} меньше блока {factor}")
    blocks = image.pixels[:h * factor, :w * factor].reshape(h, factor, w, factor, 3)
    return Image(blocks.mean(axis=(1, 3)))


def make_multiscale_targets(image: Image, scales: Sequence[Union[ScaleSet, float]]) -> List[Image]:
    """Цели для набора масштабов в заданном порядке (бикубическое уменьшение)"""
    targets = []
    for s in scales:
        factor = s.factor if isinstance(s, ScaleSet) else float(s)
        targets.append(bicubic_downsample(image, factor))
        logger.debug(f"Цель x{factor:g}: {targets[-1].width}x{targets[-1].height}")
    return targets


def stripe_image(width: int, height: int, period: int = 2, vertical: bool = True,
                 colors: Tuple = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), band: int = 0) -> Image:
    """
    Полосы периода period px (половина периода - каждый цвет)

    При band > 0 полосы видны только в чередующихся поперечных лентах шириной band px,
    остальные ленты закрашены первым цветом; структура лент переживает уменьшение в band раз.
    """
    if period < 2 or period % 2:
        raise DomainError(f"Период полос должен быть четным и ≥ 2, получено {period}")
    if band < 0:
        raise DomainError(f"Ширина ленты должна быть ≥ 0, получено {band}")
    coord = np.arange(width if vertical else height)
    band_index = (coord // (period // 2)) % 2
    palette = np.asarray(colors, dtype=np.float64)
    line = palette[band_index]
    pixels = np.broadcast_to(line[None, :, :], (height, width, 3)) if vertical \
        else np.broadcast_to(line[:, None, :], (height, width, 3))
    pixels = pixels.copy()
    if band:
        across = np.arange(height if vertical else width)
        hidden = (across // band) % 2 == 1
        if vertical:
            pixels[hidden] = palette[0]
        else:
            pixels[:, hidden] = palette[0]
    return Image(pixels)


def checkerboard_image(width: int, height: int, cell: int = 1) -> Image:
    """Шахматная доска из черных и белых клеток cell×cell"""
    ys, xs = np.mgrid[0:height, 0:width]
    value = ((xs // cell + ys // cell) % 2).astype(np.float64)
    return Image(np.repeat(value[:, :, None], 3, axis=2))


def fit_camera(width: int, height: int) -> Camera:
    """Камера оптимизации: fx = fy = width, главная точка в центре, единичная поза"""
    return Camera(fx=width, fy=width, cx=width / 2.0, cy=height / 2.0, width=width, height=height)


def _axis_angle_z(angles: np.ndarray) -> np.ndarray:
    """Кватернионы поворота вокруг оси z"""
    half = 0.5 * angles
    zeros = np.zeros_like(angles)
    return np.stack([np.cos(half), zeros, zeros, np.sin(half)], axis=-1)


def thin_gaussian_scene(camera: Camera, count: int = 24, seed: int = 0, minor_sigma_px: float = 0.5,
                        major_sigma_px: Tuple[float, float] = (4.0, 12.0), depth: float = 1.0) -> GaussianParams:
    """
    Сцена из тонких анизотропных гауссианов на плоскости z = depth

    Малая полуось - minor_sigma_px пикселей полного разрешения, большая - случайная
    из major_sigma_px, поворот в плоскости экрана случайный.
    """
    rng = make_rng(seed)
    u = rng.uniform(0.1, 0.9, count) * camera.width
    v = rng.uniform(0.1, 0.9, count) * camera.height
    positions = np.stack([(u - camera.cx) * depth / camera.fx, (v - camera.cy) * depth / camera.fy,
                          np.full(count, depth)], axis=-1)
    major = rng.uniform(*major_sigma_px, count)
    px_to_world = depth / camera.fx
    log_scales = np.log(np.stack([major, np.full(count, minor_sigma_px), np.full(count, minor_sigma_px)],
                                 axis=-1) * px_to_world)
    rotations = _axis_angle_z(rng.uniform(0.0, np.pi, count))
    colors = rng.uniform(0.2, 1.0, (count, 3))
    return GaussianParams(positions, rotations, log_scales, np.full(count, 2.0), colors)


def init_gaussians(target: Image, camera: Camera, count: int, seed: int = 0,
                   depth: float = 1.0, sigma_px: float = 2.0) -> GaussianParams:
    """
    Начальная сцена: центры равномерно по кадру на глубине depth, изотропные
    масштабы с проекцией σ ≈ sigma_px, логит непрозрачности 0, цвет из цели
    """
    rng = make_rng(seed)
    u = rng.uniform(0.0, camera.width, count)
    v = rng.uniform(0.0, camera.height, count)
    positions = np.stack([(u - camera.cx) * depth / camera.fx, (v - camera.cy) * depth / camera.fy,
                          np.full(count, depth)], axis=-1)
    log_scales = np.full((count, 3), np.log(sigma_px * depth / camera.fx))
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (count, 1))
    sx = np.clip((u * target.width / camera.width).astype(np.int64), 0, target.width - 1)
    sy = np.clip((v * target.height / camera.height).astype(np.int64), 0, target.height - 1)
    colors = target.pixels[sy, sx].copy()
    return GaussianParams(positions, rotations, log_scales, np.zeros(count), colors)
