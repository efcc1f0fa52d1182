# -*- coding: utf-8 -*-
"""
Базовая численная часть: логистическая аппроксимация нормальной CDF,
интегралы по окну пикселя и собственное разложение симметричных 2×2 матриц

Все функции векторизованы по numpy (аргументы транслируются) и работают в float64.
"""

from typing import Callable, Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import DomainError
from ..models.gaussians import Conic2, EigenDecomp2, SymMat2

# Коэффициенты логистической аппроксимации S(x) = 1 / (1 + exp(-1.6x - 0.07x³))
CDF_LINEAR = 1.6
CDF_CUBIC = 0.07

# Порог внедиагонального элемента, ниже которого базис берется вдоль осей
OFFDIAG_EPS = 1e-12

# Допуск на отрицательный определитель PSD матрицы (в единицах Tr²)
PSD_TOLERANCE = 1e-12

CdfFunction = Callable[[np.ndarray], np.ndarray]


def _check_sigma(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    if not np.all(sigma > 0):
        raise DomainError(f"σ должна быть положительной, получено {np.min(sigma)}")
    return sigma


def logistic_cdf(x):
    """S(x) = 1 / (1 + exp(-1.6x - 0.07x³)); NaN передается без изменений"""
    x = np.asarray(x, dtype=np.float64)
    return expit(x * (CDF_LINEAR + CDF_CUBIC * x * x))


def logistic_cdf_scaled(x, sigma):
    """S_σ(x) = S(x / σ)"""
    sigma = _check_sigma(sigma)
    return logistic_cdf(np.asarray(x, dtype=np.float64) / sigma)


def logistic_pdf(t):
    """dS/dt = (1.6 + 0.21t²)·S(t)(1 - S(t))"""
    t = np.asarray(t, dtype=np.float64)
    z = t * (CDF_LINEAR + CDF_CUBIC * t * t)
    return (CDF_LINEAR + 3.0 * CDF_CUBIC * t * t) * expit(z) * expit(-z)


def cdf_derivative(x, sigma) -> Tuple[np.ndarray, np.ndarray]:
    """
    Частные производные S_σ(x) по x и по σ

    Returns:
        (∂S_σ/∂x, ∂S_σ/∂σ)
    """
    sigma = _check_sigma(sigma)
    x = np.asarray(x, dtype=np.float64)
    t = x / sigma
    dx = logistic_pdf(t) / sigma
    return dx, -dx * t


def window_integral_1d(u, sigma, cdf: CdfFunction = logistic_cdf):
    """
    Интеграл нормированной гауссианы по окну [u-½, u+½]: S_σ(u+½) - S_σ(u-½)

    Вычисляется в точке -|u|, где обе CDF малы: результат точно четен по u
    и не теряет точность в хвосте.

    Args:
        u: Смещение центра пикселя относительно центра гауссианы, px
        sigma: Стандартное отклонение, px
        cdf: Стандартная CDF (по умолчанию логистическая аппроксимация)
    """
    sigma = _check_sigma(sigma)
    m = -np.abs(np.asarray(u, dtype=np.float64))
    return cdf((m + 0.5) / sigma) - cdf((m - 0.5) / sigma)


def window_partials(u, sigma):
    """
    Оконный интеграл логистической CDF и его частные производные

    Returns:
        (W, ∂W/∂u, ∂W/∂σ)
    """
    sigma = _check_sigma(sigma)
    u = np.asarray(u, dtype=np.float64)
    m = -np.abs(u)
    t_hi = (m + 0.5) / sigma
    t_lo = (m - 0.5) / sigma
    value = logistic_cdf(t_hi) - logistic_cdf(t_lo)
    p_hi = logistic_pdf(t_hi) / sigma
    p_lo = logistic_pdf(t_lo) / sigma
    d_u = -np.sign(u) * (p_hi - p_lo)
    d_sigma = -(p_hi * t_hi - p_lo * t_lo)
    return value, d_u, d_sigma


def eigendecompose_batch(s11, s12, s22):
    """
    Векторизованное собственное разложение симметричных 2×2 матриц

    Соглашения: λ₁ ≥ λ₂ ≥ 0; первая ненулевая компонента v₁ положительна;
    v₂ = (-v₁y, v₁x). При |s12| < 1e-12·max(s11, s22, 1) базис берется вдоль
    осей в порядке убывания дисперсии, при равенстве - (1,0), (0,1).

    Returns:
        (lambda1 (N,), lambda2 (N,), v1 (N,2), v2 (N,2))

    Raises:
        DomainError: Матрица не положительно полуопределена с допуском
    """
    s11 = np.atleast_1d(np.asarray(s11, dtype=np.float64))
    s12 = np.atleast_1d(np.asarray(s12, dtype=np.float64))
    s22 = np.atleast_1d(np.asarray(s22, dtype=np.float64))
    s11, s12, s22 = np.broadcast_arrays(s11, s12, s22)

    trace = s11 + s22
    det = s11 * s22 - s12 * s12
    bad = ~(np.isfinite(det) & np.isfinite(trace)) | (det < -PSD_TOLERANCE * trace * trace) | (trace < 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DomainError(
            f"Матрица [[{s11[i]}, {s12[i]}], [{s12[i]}, {s22[i]}]] не положительно полуопределена: "
            f"det = {det[i]}")

    # Разность собственных значений через hypot, без вычитания близких корней
    half_gap = 0.5 * np.hypot(s11 - s22, 2.0 * s12)
    lambda1 = 0.5 * trace + half_gap
    with np.errstate(divide='ignore', invalid='ignore'):
        lambda2 = np.where(lambda1 > 0, det / lambda1, 0.0)
    lambda2 = np.clip(lambda2, 0.0, lambda1)

    # Из двух строк (Σ - λ₁I) берем вектор с большей нормой
    a = np.stack([s12, lambda1 - s11], axis=-1)
    b = np.stack([lambda1 - s22, s12], axis=-1)
    a_norm = np.linalg.norm(a, axis=-1)
    b_norm = np.linalg.norm(b, axis=-1)
    use_a = a_norm >= b_norm
    v1 = np.where(use_a[:, None], a, b)
    norm = np.where(use_a, a_norm, b_norm)

    axis_aligned = (np.abs(s12) < OFFDIAG_EPS * np.maximum(np.maximum(s11, s22), 1.0)) | (norm == 0.0)
    x_major = s11 >= s22
    axis_v1 = np.stack([x_major.astype(np.float64), (~x_major).astype(np.float64)], axis=-1)
    with np.errstate(divide='ignore', invalid='ignore'):
        v1 = np.where(axis_aligned[:, None], axis_v1, v1 / norm[:, None])

    flip = (v1[:, 0] < 0) | ((v1[:, 0] == 0) & (v1[:, 1] < 0))
    v1 = np.where(flip[:, None], -v1, v1)
    v2 = np.stack([-v1[:, 1], v1[:, 0]], axis=-1)
    return lambda1, lambda2, v1, v2


def eigendecompose(m: SymMat2) -> EigenDecomp2:
    """Собственное разложение одной матрицы (см. eigendecompose_batch)"""
    lambda1, lambda2, v1, v2 = eigendecompose_batch(m.s11, m.s12, m.s22)
    return EigenDecomp2(float(lambda1[0]), float(lambda2[0]),
                        (float(v1[0, 0]), float(v1[0, 1])), (float(v2[0, 0]), float(v2[0, 1])))


def conic_batch(cov: np.ndarray) -> np.ndarray:
    """
    Обратные ковариации (a, b, c) для массива (N,3) из (s11, s12, s22)

    Raises:
        DomainError: det ≤ 0 хотя бы у одной матрицы
    """
    cov = np.asarray(cov, dtype=np.float64).reshape(-1, 3)
    det = cov[:, 0] * cov[:, 2] - cov[:, 1] ** 2
    if not np.all(det > 0):
        i = int(np.argmin(np.where(np.isnan(det), -np.inf, det)))
        raise DomainError(f"Вырожденная ковариация {tuple(cov[i])}: det = {det[i]}")
    return np.stack([cov[:, 2] / det, -cov[:, 1] / det, cov[:, 0] / det], axis=-1)


def conic_from_cov(m: SymMat2) -> Conic2:
    """Элементы Σ⁻¹: a = s22/det, b = -s12/det, c = s11/det"""
    a, b, c = conic_batch(m.as_array())[0]
    return Conic2(float(a), float(b), float(c))
