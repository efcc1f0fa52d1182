# -*- coding: utf-8 -*-
"""
Метрики качества изображения: PSNR и SSIM (с градиентом для D-SSIM слагаемого функции потерь)
"""

import math
from typing import Tuple

import numpy as np
from skimage.metrics import structural_similarity

from ..core.errors import DomainError
from ..models.image import Image

# PSNR одинаковых изображений
PSNR_IDENTICAL = math.inf

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 1.0


def _pixels(image) -> np.ndarray:
    return image.pixels if isinstance(image, Image) else np.asarray(image, dtype=np.float64)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DomainError(f"Размеры изображений не совпадают: {a.shape} и {b.shape}")


def psnr(a, b) -> float:
    """
    10·log10(1 / MSE) по всем каналам

    Returns:
        PSNR в дБ; PSNR_IDENTICAL (inf) для одинаковых изображений
    """
    a, b = _pixels(a), _pixels(b)
    _check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(DYNAMIC_RANGE ** 2 / mse)


def _ssim(a, b, want_grad: bool):
    a, b = _pixels(a), _pixels(b)
    _check_same_shape(a, b)
    height, width = a.shape[0], a.shape[1]
    if min(height, width) < SSIM_WINDOW:
        raise DomainError(f"SSIM требует сторону изображения ≥ {SSIM_WINDOW}, получено "
                          f"{width}x{height}")
    # Градиент skimage берется по второму аргументу; SSIM симметричен, поэтому a передается вторым
    result = structural_similarity(b, a, gaussian_weights=True, sigma=SSIM_SIGMA,
                                   use_sample_covariance=False, data_range=DYNAMIC_RANGE, K1=SSIM_K1, K2=SSIM_K2,
                                   channel_axis=-1, gradient=want_grad)
    if not want_grad:
        return float(result), None
    value, grad = result
    # skimage нормирует на полный размер канала и суммирует каналы; среднее SSIM считается
    # по окнам, целиком лежащим в изображении, и по каналам
    pad = (SSIM_WINDOW - 1) // 2
    scale = (height * width) / ((height - 2 * pad) * (width - 2 * pad) * a.shape[2])
    return float(value), grad * scale


def ssim(a, b) -> float:
    """Средний SSIM: окно 11×11 с σ = 1.5, K1 = 0.01, K2 = 0.03, среднее по каналам"""
    return _ssim(a, b, False)[0]


def ssim_with_grad(a, b) -> Tuple[float, np.ndarray]:
    """
    SSIM и его градиент по первому изображению (H,W,3)

    Градиент точен для пикселей не ближе 2·5 от края; у края skimage отражает изображение.
    """
    return _ssim(a, b, True)
