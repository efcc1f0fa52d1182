# -*- coding: utf-8 -*-
"""
Эталоны для оценки ошибок аппроксимации: точная нормальная CDF,
квадратура оконного интеграла и стратифицированный Монте-Карло в окне пикселя
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from ..core.config import Config
from ..core.errors import DomainError
from ..optim.targets import make_rng

ORACLE_KINDS = ('erf_series', 'quad_1d', 'mc_2d')


def true_cdf(x):
    """Φ(x) стандартного нормального распределения"""
    return ndtr(np.asarray(x, dtype=np.float64))


def true_window_integral(u, sigma):
    """Φ((u+½)/σ) - Φ((u-½)/σ), вычисленный в точке -|u|"""
    m = -np.abs(np.asarray(u, dtype=np.float64))
    return ndtr((m + 0.5) / sigma) - ndtr((m - 0.5) / sigma)


def normal_pdf(x, sigma):
    """Плотность N(0, σ²)"""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))


def quad_window_integral(u: float, sigma: float) -> float:
    """Адаптивная квадратура плотности N(0, σ²) по окну [u-½, u+½]"""
    if not sigma > 0:
        raise DomainError(f"σ должна быть положительной, получено {sigma}")
    m = -abs(float(u))
    value, _ = quad(lambda x: float(normal_pdf(x, sigma)), m - 0.5, m + 0.5, epsabs=1e-15, epsrel=1e-13)
    return value


def _stratified_samples(seed: int, samples: int) -> Tuple[np.ndarray, np.ndarray]:
    """Стратифицированная сетка side×side в окне [-½, ½]², каждая ячейка со случайным сдвигом"""
    side = int(round(np.sqrt(samples)))
    if side * side != samples:
        raise DomainError(f"Число выборок должно быть точным квадратом, получено {samples}")
    rng = make_rng(seed)
    jitter = rng.random((2, side, side))
    cells = np.arange(side)
    sx = (cells[None, :] + jitter[0]) / side - 0.5
    sy = (cells[:, None] + jitter[1]) / side - 0.5
    return sx.reshape(-1), sy.reshape(-1)


def mc_window_2d(offset, cov, seed: int, samples: int = None) -> float:
    """
    Средний отклик гауссианы единичной высоты в окне пикселя (площадь окна 1)

    Args:
        offset: pixel - mean, px
        cov: Ковариация (s11, s12, s22), px²
        seed: Зерно генератора сдвигов
        samples: Число выборок (точный квадрат, по умолчанию Config.MC_SAMPLES)
    """
    samples = samples or Config.MC_SAMPLES
    s11, s12, s22 = (float(v) for v in cov)
    det = s11 * s22 - s12 * s12
    if not det > 0:
        raise DomainError(f"Вырожденная ковариация {tuple(cov)}: det = {det}")
    a, b, c = s22 / det, -s12 / det, s11 / det
    sx, sy = _stratified_samples(seed, samples)
    dx = offset[0] + sx
    dy = offset[1] + sy
    return float(np.mean(np.exp(-0.5 * (a * dx * dx + c * dy * dy) - b * dx * dy)))


@dataclass(frozen=True)
class Oracle:
    """Эталон: 'erf_series' (Φ через ndtr), 'quad_1d' (квадратура) или 'mc_2d' (Монте-Карло)"""

    kind: str = 'quad_1d'
    seed: int = 0
    samples: int = 65536

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise DomainError(f"Неизвестный эталон '{self.kind}', допустимы {ORACLE_KINDS}")

    def window_1d(self, u: float, sigma: float) -> float:
        """Нормированный оконный интеграл"""
        if self.kind == 'quad_1d':
            return quad_window_integral(u, sigma)
        if self.kind == 'erf_series':
            return float(true_window_integral(u, sigma))
        # Очень широкая гауссиана по y дает множитель ≈ 1 по второй оси
        unit = mc_window_2d((u, 0.0), (sigma * sigma, 0.0, 1e12), self.seed, self.samples)
        return unit / (sigma * np.sqrt(2.0 * np.pi))

    def window_2d(self, offset, cov) -> float:
        """Отклик гауссианы единичной высоты в окне пикселя"""
        if self.kind != 'mc_2d':
            raise DomainError(f"Эталон '{self.kind}' не поддерживает двумерное окно")
        return mc_window_2d(offset, cov, self.seed, self.samples)
