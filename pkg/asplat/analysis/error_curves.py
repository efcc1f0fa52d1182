# -*- coding: utf-8 -*-
"""
Кривые ошибок аппроксимации: ошибка CDF и ошибка оконного интеграла
в зависимости от σ, нормированного смещения и угла поворота окна

Все ошибки - в нормированных единицах (интеграл плотности). Отклик шейдинга
для гауссианы единичной высоты переводится делением на σ√(2π) по каждой оси.
"""

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import AsplatError, DomainError
from ..core.parallel import map_ordered
from ..models.scheme import SchemeKind, ShadeScheme
from ..splatting.gauss_core import logistic_cdf, window_integral_1d
from ..splatting.shading import ShadingParams
from .oracles import mc_window_2d, normal_pdf, quad_window_integral, true_cdf

logger = logging.getLogger('ErrorAnalysis')

SIGMA_RANGE = (0.3, 6.6)
ANGLE_RANGE = (0.0, 45.0)
CDF_GRID_STEP = 1e-3
CDF_GRID_END = 6.0
OFFSET_POINTS = 301
EVEN_TOLERANCE = 1e-12
CSV_HEADER = "param,scheme,max_error,mean_error"

DEFAULT_SCHEMES = ('analytic', 'center', 'supersample:2', 'prefilter:0.1')
DEFAULT_SIGMA_PAIRS = ((1.0, 1.0), (2.0, 0.5), (6.6, 0.3))
DEFAULT_ANGLES = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0)
MC_SEED = 7


def default_sigmas(count: int = 32) -> np.ndarray:
    """Логарифмическая сетка σ на [0.3, 6.6]"""
    return np.geomspace(SIGMA_RANGE[0], SIGMA_RANGE[1], count)


@dataclass(frozen=True)
class ErrorRow:
    param: float
    scheme: str
    max_error: float
    mean_error: float


@dataclass
class ErrorCurve:
    """Кривая ошибок: строки (значение параметра, схема, max, mean)"""

    parameter: str
    schemes: List[str]
    rows: List[ErrorRow] = field(default_factory=list)

    def add(self, param: float, scheme: str, errors: np.ndarray) -> None:
        errors = np.abs(np.asarray(errors, dtype=np.float64))
        self.rows.append(ErrorRow(float(param), scheme, float(errors.max()), float(errors.mean())))

    def params(self) -> np.ndarray:
        """Значения параметра без повторов в порядке возрастания"""
        return np.array(sorted({r.param for r in self.rows}))

    def max_errors(self, scheme: str) -> np.ndarray:
        return np.array([r.max_error for r in self.rows if r.scheme == scheme])

    def mean_errors(self, scheme: str) -> np.ndarray:
        return np.array([r.mean_error for r in self.rows if r.scheme == scheme])

    def to_csv(self) -> str:
        """CSV с заголовком param,scheme,max_error,mean_error; 9 значащих цифр, LF"""
        out = io.StringIO(newline='')
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            out.write(f"{r.param:.9g},{r.scheme},{r.max_error:.9g},{r.mean_error:.9g}\n")
        return out.getvalue()

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.to_csv())
        logger.info(f"Кривая '{self.parameter}' ({len(self.rows)} строк) сохранена в {path}")
        return path


# ----- валидация -----

def _check_sigmas(sigmas: Iterable[float]) -> np.ndarray:
    sigmas = np.asarray(list(sigmas), dtype=np.float64)
    if sigmas.size == 0:
        raise DomainError("Пустой список σ")
    low, high = SIGMA_RANGE
    bad = sigmas[(sigmas < low - 1e-12) | (sigmas > high + 1e-12)]
    if bad.size:
        raise DomainError(f"σ вне диапазона [{low}, {high}]: {bad.tolist()}")
    if np.any(np.diff(sigmas) <= 0):
        raise DomainError("Значения σ должны строго возрастать")
    return sigmas


def _check_schemes(schemes: Sequence) -> List[ShadeScheme]:
    return [s if isinstance(s, ShadeScheme) else ShadeScheme.parse(s) for s in schemes]


def check_even(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray, what: str) -> float:
    """
    Проверка четности f(x) = f(-x) на контрольных парах

    Raises:
        AsplatError: Асимметрия превышает EVEN_TOLERANCE
    """
    points = np.asarray(points, dtype=np.float64)
    asymmetry = float(np.max(np.abs(fn(points) - fn(-points))))
    if asymmetry > EVEN_TOLERANCE:
        raise AsplatError(f"Функция ошибки '{what}' не четная: асимметрия {asymmetry:.3e}")
    return asymmetry


# ----- одномерные оценки -----

def window_estimate_1d(scheme: ShadeScheme, x, sigma: float) -> np.ndarray:
    """
    Оценка нормированного оконного интеграла схемой шейдинга

    Точечные схемы умножаются на ширину окна (1 px).
    """
    x = np.asarray(x, dtype=np.float64)
    if scheme.kind is SchemeKind.ANALYTIC:
        return window_integral_1d(x, sigma)
    if scheme.kind is SchemeKind.CENTER:
        return normal_pdf(x, sigma)
    if scheme.kind is SchemeKind.SUPERSAMPLE:
        offsets = (np.arange(scheme.n) + 0.5) / scheme.n - 0.5
        return np.mean([normal_pdf(x + o, sigma) for o in offsets], axis=0)
    return normal_pdf(x, np.sqrt(sigma * sigma + scheme.sigma_w * scheme.sigma_w))


def _quad_truth(offsets: np.ndarray, sigma: float) -> np.ndarray:
    return np.array([quad_window_integral(x, sigma) for x in offsets])


# ----- кривые -----

def e_cdf_curve(sigmas: Iterable[float]) -> ErrorCurve:
    """
    max и mean |S(x/σ) - Φ(x/σ)| по x ∈ [0, 6] с шагом 1e-3 для каждого σ
    """
    sigmas = _check_sigmas(sigmas)
    grid = np.arange(0.0, CDF_GRID_END + CDF_GRID_STEP / 2, CDF_GRID_STEP)
    curve = ErrorCurve('sigma', ['logistic'])
    for sigma in sigmas:
        def error(x, s=sigma):
            return np.abs(logistic_cdf(x / s) - true_cdf(x / s))

        check_even(error, grid[1::500], 'cdf')
        curve.add(sigma, 'logistic', error(grid))
    logger.debug(f"E_CDF: {len(sigmas)} значений σ, max {max(r.max_error for r in curve.rows):.3e}")
    return curve


def e_int_curve(sigmas: Iterable[float], schemes: Sequence = DEFAULT_SCHEMES,
                workers: Optional[int] = None) -> ErrorCurve:
    """
    Ошибка оконного интеграла для каждого σ и схемы по смещениям x ∈ [0, 3σ]
    относительно адаптивной квадратуры
    """
    sigmas = _check_sigmas(sigmas)
    schemes = _check_schemes(schemes)

    def point(sigma: float) -> List[np.ndarray]:
        offsets = np.linspace(0.0, 3.0 * sigma, OFFSET_POINTS)
        truth = _quad_truth(offsets, sigma)
        result = []
        for scheme in schemes:
            check_even(lambda x: window_estimate_1d(scheme, x, sigma), offsets[1::50], scheme.label)
            result.append(window_estimate_1d(scheme, offsets, sigma) - truth)
        return result

    errors = map_ordered(point, sigmas, workers)
    curve = ErrorCurve('sigma', [s.label for s in schemes])
    for sigma, per_scheme in zip(sigmas, errors):
        for scheme, e in zip(schemes, per_scheme):
            curve.add(sigma, scheme.label, e)
    logger.info(f"E_Int: {len(sigmas)} значений σ × {len(schemes)} схем")
    return curve


def e_int_offset_curve(offsets_in_sigma: Iterable[float], sigmas: Iterable[float],
                       schemes: Sequence = DEFAULT_SCHEMES, workers: Optional[int] = None) -> ErrorCurve:
    """
    Ошибка оконного интеграла в зависимости от нормированного смещения x/σ ∈ [0, 3];
    max и mean берутся по списку σ
    """
    offsets = np.asarray(list(offsets_in_sigma), dtype=np.float64)
    if offsets.size == 0 or np.any(offsets < 0) or np.any(offsets > 3.0 + 1e-12):
        raise DomainError(f"Нормированные смещения должны лежать в [0, 3], получено {offsets.tolist()}")
    if np.any(np.diff(offsets) <= 0):
        raise DomainError("Нормированные смещения должны строго возрастать")
    sigmas = _check_sigmas(sigmas)
    schemes = _check_schemes(schemes)

    def point(sigma: float) -> List[np.ndarray]:
        x = offsets * sigma
        truth = _quad_truth(x, sigma)
        return [window_estimate_1d(scheme, x, sigma) - truth for scheme in schemes]

    # (σ, схема, смещение)
    table = np.array(map_ordered(point, sigmas, workers))
    curve = ErrorCurve('offset', [s.label for s in schemes])
    for k, r in enumerate(offsets):
        for j, scheme in enumerate(schemes):
            curve.add(r, scheme.label, table[:, j, k])
    return curve


def _rotated_cov(sigma1: float, sigma2: float, theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Ковариация (s11, s12, s22) и матрица поворота на угол theta"""
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    matrix = rot @ np.diag([sigma1 * sigma1, sigma2 * sigma2]) @ rot.T
    return np.array([matrix[0, 0], matrix[0, 1], matrix[1, 1]]), rot


def rotation_offsets(sigma1: float, sigma2: float) -> np.ndarray:
    """Смещения в собственном базисе: ũx ∈ [-3σ₁, 3σ₁] и ũy ∈ [0, 3σ₂] с шагом σ/2"""
    ux = np.arange(-6, 7) * 0.5 * sigma1
    uy = np.arange(0, 7) * 0.5 * sigma2
    gx, gy = np.meshgrid(ux, uy)
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=-1)


def rotation_error_curve(angles_deg: Iterable[float] = DEFAULT_ANGLES,
                         sigma_pairs: Sequence[Tuple[float, float]] = DEFAULT_SIGMA_PAIRS,
                         schemes: Sequence = ('analytic', 'center'), seed: int = MC_SEED,
                         samples: Optional[int] = None, workers: Optional[int] = None) -> ErrorCurve:
    """
    Ошибка отклика при повороте гауссианы относительно осевого окна пикселя

    Эталон - стратифицированный Монте-Карло по осевому окну. Метка схемы в строке:
    '<схема>@<σ₁>x<σ₂>'.

    Args:
        angles_deg: Углы поворота в [0, 45], строго возрастающие
        sigma_pairs: Пары (σ₁, σ₂) с σ₁ ≥ σ₂
        schemes: Схемы шейдинга
        seed: Зерно Монте-Карло
        samples: Число выборок Монте-Карло (точный квадрат)
        workers: Число потоков
    """
    angles = np.asarray(list(angles_deg), dtype=np.float64)
    if angles.size == 0 or np.any(angles < ANGLE_RANGE[0]) or np.any(angles > ANGLE_RANGE[1]):
        raise DomainError(f"Углы должны лежать в [0, 45]°, получено {angles.tolist()}")
    if np.any(np.diff(angles) <= 0):
        raise DomainError("Углы должны строго возрастать")
    for sigma1, sigma2 in sigma_pairs:
        _check_sigmas([sigma2, sigma1] if sigma1 > sigma2 else [sigma1])
        if sigma1 < sigma2:
            raise DomainError(f"Ожидается σ₁ ≥ σ₂, получено ({sigma1}, {sigma2})")
    schemes = _check_schemes(schemes)

    tasks = [(theta, pair) for theta in angles for pair in sigma_pairs]

    def point(task) -> List[np.ndarray]:
        theta, (sigma1, sigma2) = task
        cov, rot = _rotated_cov(sigma1, sigma2, np.radians(theta))
        d = rotation_offsets(sigma1, sigma2) @ rot.T
        truth = np.array([mc_window_2d(offset, cov, seed, samples) for offset in d])
        norm = 2.0 * np.pi * sigma1 * sigma2
        result = []
        for scheme in schemes:
            params = ShadingParams.prepare(cov[None, :], scheme)
            response, _ = params.evaluate(np.array([0]), d[None, :, 0], d[None, :, 1])
            result.append((response[0] - truth) / norm)
        return result

    errors = map_ordered(point, tasks, workers)
    labels = [f"{s.label}@{a:g}x{b:g}" for a, b in sigma_pairs for s in schemes]
    curve = ErrorCurve('angle_deg', labels)
    for (theta, (sigma1, sigma2)), per_scheme in zip(tasks, errors):
        for scheme, e in zip(schemes, per_scheme):
            curve.add(theta, f"{scheme.label}@{sigma1:g}x{sigma2:g}", e)
    logger.info(f"Ошибка поворота: {len(angles)} углов × {len(sigma_pairs)} пар σ, seed={seed}")
    return curve
