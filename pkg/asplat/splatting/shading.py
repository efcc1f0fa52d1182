# -*- coding: utf-8 -*-
"""
Отклик 2D гауссиана в пикселе по четырем схемам:
выборка в центре, суперсэмплинг, предфильтрация и аналитический интеграл по окну пикселя

Ядра работают с массивами смещений d = pixel - mean формы (K, P) и параметрами
гауссианов формы (K, 1), скалярные shade_* - обертки над ними для одного пикселя.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.errors import DomainError, UnsupportedOperationError
from ..models.gaussians import Gaussian2D, ShadeResult, SymMat2
from ..models.scheme import SchemeKind, ShadeScheme
from .gauss_core import (CdfFunction, conic_batch, eigendecompose_batch, logistic_cdf,
                         window_integral_1d, window_partials)

TWO_PI = 2.0 * np.pi

# Порог разности собственных значений, ниже которого вклад поворота базиса отбрасывается
ISO_EPS = 1e-8

# Градиент отклика по (μx, μy, s11, s12, s22); s12 агрегирует оба внедиагональных элемента
ResponseGrad = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]


# ----- ядра -----

def center_kernel(dx, dy, a, b, c):
    """exp(-(a/2)dx² - (c/2)dy² - b·dx·dy)"""
    return np.exp(-0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy)


def center_kernel_grad(dx, dy, a, b, c, response) -> ResponseGrad:
    """Производные отклика выборки в центре по среднему и ковариации"""
    ex = a * dx + b * dy
    ey = b * dx + c * dy
    return (response * ex, response * ey,
            0.5 * response * ex * ex, response * ex * ey, 0.5 * response * ey * ey)


def supersample_kernel(dx, dy, a, b, c, n: int):
    """Среднее выборок в центре по регулярной сетке n×n внутри пикселя"""
    offsets = (np.arange(n) + 0.5) / n - 0.5
    total = np.zeros(np.broadcast(dx, a).shape)
    for ox in offsets:
        for oy in offsets:
            total += center_kernel(dx + ox, dy + oy, a, b, c)
    return total / (n * n)


def prefilter_terms(cov: np.ndarray, sigma_w: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Конические коэффициенты свертки Σ + σ_w²I и амплитуда √(|Σ| / |Σ + σ_w²I|)

    Args:
        cov: (N,3) ковариации
        sigma_w: σ фильтра, px

    Returns:
        (conic (N,3), amplitude (N,))
    """
    cov = np.asarray(cov, dtype=np.float64).reshape(-1, 3)
    filtered = cov + np.array([sigma_w ** 2, 0.0, sigma_w ** 2])
    det = cov[:, 0] * cov[:, 2] - cov[:, 1] ** 2
    det_f = filtered[:, 0] * filtered[:, 2] - filtered[:, 1] ** 2
    if not np.all(det > 0):
        raise DomainError(f"Вырожденная ковариация: det = {np.min(det)}")
    return conic_batch(filtered), np.sqrt(det / det_f)


def analytic_kernel(dx, dy, lambda1, lambda2, v1x, v1y, v2x, v2y,
                    want_grad: bool = False, cdf: CdfFunction = logistic_cdf):
    """
    Аналитический интеграл гауссиана по окну пикселя в собственном базисе ковариации

    I = 2πσ₁σ₂·[S_σ₁(ũx+½) - S_σ₁(ũx-½)]·[S_σ₂(ũy+½) - S_σ₂(ũy-½)], ũ = (v₁·d, v₂·d),
    результат ограничивается [0, 1]; там, где ограничение сработало, градиент нулевой.

    Args:
        dx, dy: Смещения pixel - mean
        lambda1, lambda2, v1x, v1y, v2x, v2y: Собственное разложение ковариации
        want_grad: Вычислить производные
        cdf: Подмена стандартной CDF (только без градиентов)

    Returns:
        (response, raw, grad) где grad - ResponseGrad или None
    """
    sigma1 = np.sqrt(lambda1)
    sigma2 = np.sqrt(lambda2)
    ux = v1x * dx + v1y * dy
    uy = v2x * dx + v2y * dy
    scale = TWO_PI * sigma1 * sigma2

    if not want_grad:
        raw = scale * window_integral_1d(ux, sigma1, cdf) * window_integral_1d(uy, sigma2, cdf)
        return np.clip(raw, 0.0, 1.0), raw, None
    if cdf is not logistic_cdf:
        raise UnsupportedOperationError("Градиенты доступны только для логистической CDF")

    wx, dwx_du, dwx_ds = window_partials(ux, sigma1)
    wy, dwy_du, dwy_ds = window_partials(uy, sigma2)
    raw = scale * wx * wy
    active = raw <= 1.0

    g_ux = scale * dwx_du * wy
    g_uy = scale * wx * dwy_du
    g_lambda1 = (TWO_PI * sigma2 * wx * wy + scale * dwx_ds * wy) / (2.0 * sigma1)
    g_lambda2 = (TWO_PI * sigma1 * wx * wy + scale * wx * dwy_ds) / (2.0 * sigma2)

    gap = lambda1 - lambda2
    rotating = gap >= ISO_EPS * np.maximum(lambda1, 1.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        k = np.where(rotating, (g_ux * uy - g_uy * ux) / np.where(rotating, gap, 1.0), 0.0)

    d_mx = -(g_ux * v1x + g_uy * v2x)
    d_my = -(g_ux * v1y + g_uy * v2y)
    d_s11 = g_lambda1 * v1x * v1x + g_lambda2 * v2x * v2x + k * v1x * v2x
    d_s12 = (2.0 * g_lambda1 * v1x * v1y + 2.0 * g_lambda2 * v2x * v2y
             + k * (v1x * v2y + v1y * v2x))
    d_s22 = g_lambda1 * v1y * v1y + g_lambda2 * v2y * v2y + k * v1y * v2y
    grad = tuple(np.where(active, g, 0.0) for g in (d_mx, d_my, d_s11, d_s12, d_s22))
    return np.clip(raw, 0.0, 1.0), raw, grad


# ----- подготовка параметров для набора гауссианов -----

@dataclass
class ShadingParams:
    """Предвычисленные по ковариациям параметры схемы для набора гауссианов"""

    scheme: ShadeScheme
    conic: Optional[np.ndarray] = None
    amplitude: Optional[np.ndarray] = None
    lambda1: Optional[np.ndarray] = None
    lambda2: Optional[np.ndarray] = None
    v1: Optional[np.ndarray] = None
    v2: Optional[np.ndarray] = None
    cdf: CdfFunction = logistic_cdf

    @classmethod
    def prepare(cls, cov: np.ndarray, scheme: ShadeScheme, cdf: CdfFunction = logistic_cdf) -> 'ShadingParams':
        """
        Args:
            cov: (N,3) ковариации (уже после дилатации/ограничения собственных значений)
            scheme: Схема шейдинга
            cdf: Стандартная CDF аналитической схемы
        """
        cov = np.asarray(cov, dtype=np.float64).reshape(-1, 3)
        if scheme.kind is SchemeKind.ANALYTIC:
            if len(cov) == 0:
                empty = np.zeros(0)
                return cls(scheme, lambda1=empty, lambda2=empty,
                           v1=np.zeros((0, 2)), v2=np.zeros((0, 2)), cdf=cdf)
            lambda1, lambda2, v1, v2 = eigendecompose_batch(cov[:, 0], cov[:, 1], cov[:, 2])
            if not np.all(lambda2 > 0):
                i = int(np.argmin(lambda2))
                raise DomainError(f"Вырожденная ковариация {tuple(cov[i])}: λ₂ = {lambda2[i]}")
            return cls(scheme, lambda1=lambda1, lambda2=lambda2, v1=v1, v2=v2, cdf=cdf)
        if scheme.kind is SchemeKind.PREFILTER:
            conic, amplitude = prefilter_terms(cov, scheme.sigma_w)
            return cls(scheme, conic=conic, amplitude=amplitude)
        return cls(scheme, conic=conic_batch(cov) if len(cov) else np.zeros((0, 3)))

    def evaluate(self, idx: np.ndarray, dx: np.ndarray, dy: np.ndarray,
                 want_grad: bool = False) -> Tuple[np.ndarray, Optional[ResponseGrad]]:
        """
        Отклик выбранных гауссианов в пикселях

        Args:
            idx: (K,) индексы гауссианов
            dx, dy: (K, P) смещения pixel - mean
            want_grad: Вычислить производные по среднему и ковариации

        Returns:
            (response (K,P), grad или None)

        Raises:
            UnsupportedOperationError: Градиенты для суперсэмплинга или предфильтрации
        """
        kind = self.scheme.kind
        if want_grad and not self.scheme.has_backward:
            raise UnsupportedOperationError(f"Обратный проход не реализован для схемы {self.scheme.label}")
        if kind is SchemeKind.ANALYTIC:
            v1 = self.v1[idx]
            v2 = self.v2[idx]
            response, _, grad = analytic_kernel(
                dx, dy, self.lambda1[idx][:, None], self.lambda2[idx][:, None],
                v1[:, 0:1], v1[:, 1:2], v2[:, 0:1], v2[:, 1:2], want_grad=want_grad, cdf=self.cdf)
            return response, grad
        conic = self.conic[idx]
        a, b, c = conic[:, 0:1], conic[:, 1:2], conic[:, 2:3]
        if kind is SchemeKind.SUPERSAMPLE:
            return supersample_kernel(dx, dy, a, b, c, self.scheme.n), None
        response = center_kernel(dx, dy, a, b, c)
        if kind is SchemeKind.PREFILTER:
            return self.amplitude[idx][:, None] * response, None
        grad = center_kernel_grad(dx, dy, a, b, c, response) if want_grad else None
        return response, grad


# ----- скалярные операции для одного пикселя -----

def _offset(pixel, g: Gaussian2D) -> Tuple[np.ndarray, np.ndarray]:
    d = np.asarray(pixel, dtype=np.float64).reshape(2) - g.mean
    return np.array([[d[0]]]), np.array([[d[1]]])


def _shade(pixel, g: Gaussian2D, scheme: ShadeScheme, want_grad: bool = False,
           cdf: CdfFunction = logistic_cdf) -> ShadeResult:
    params = ShadingParams.prepare(g.cov.as_array(), scheme, cdf)
    dx, dy = _offset(pixel, g)
    response, grad = params.evaluate(np.array([0]), dx, dy, want_grad)
    result = ShadeResult(float(response[0, 0]))
    if grad is not None:
        values = [float(v[0, 0]) for v in grad]
        result.d_mean = np.array(values[:2])
        result.d_cov = SymMat2(*values[2:])
    return result


def shade_center(pixel, g: Gaussian2D) -> float:
    """Отклик в центре пикселя (схема 3DGS)"""
    return _shade(pixel, g, ShadeScheme.center()).response


def shade_supersample(pixel, g: Gaussian2D, n: int) -> float:
    """Среднее выборок в центре по сетке n×n подпикселей"""
    return _shade(pixel, g, ShadeScheme.supersample(n)).response


def shade_prefilter(pixel, g: Gaussian2D, sigma_w: float = None) -> float:
    """Выборка в центре свертки с гауссовым фильтром σ_w с сохранением массы сигнала"""
    return _shade(pixel, g, ShadeScheme.prefilter(sigma_w)).response


def shade_analytic(pixel, g: Gaussian2D, want_grad: bool = False,
                   cdf: CdfFunction = logistic_cdf) -> ShadeResult:
    """
    Аналитический интеграл гауссиана по окну пикселя

    Args:
        pixel: Центр пикселя, px
        g: Гауссиан
        want_grad: Заполнить d_mean и d_cov
        cdf: Подмена стандартной CDF (например, точная нормальная CDF)
    """
    return _shade(pixel, g, ShadeScheme.analytic(), want_grad, cdf)


def shade(pixel, g: Gaussian2D, scheme: ShadeScheme, want_grad: bool = False) -> ShadeResult:
    """Отклик по произвольной схеме"""
    return _shade(pixel, g, scheme, want_grad)
