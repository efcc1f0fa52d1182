# -*- coding: utf-8 -*-
"""
Обратный проход аналитической схемы, обратный проход смешивания для одного пикселя
и проверка градиентов конечными разностями
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..models.gaussians import Gaussian2D, GaussGrad, SplatBatch, SymMat2
from ..models.scheme import ShadeScheme
from ..optim.targets import make_rng
from .blend import composite, composite_backward
from .raster import RenderOptions, render_backward, render_splats
from .shading import ShadingParams, shade_analytic

logger = logging.getLogger('Gradients')

# Допуски относительной ошибки по классам параметров
GRADCHECK_TOLERANCES = {
    'mean': 1e-4,
    'cov': 1e-4,
    'opacity': 1e-5,
    'color': 1e-6,
}

FD_STEP = 1e-5

# Диапазоны случайной сцены: σ внутри диапазона ограничения собственных значений,
# анизотропия исключает пересечение собственных значений при возмущении
SCENE_SIGMA = (0.35, 3.5)
SCENE_ANISOTROPY = 1.2
SCENE_OPACITY = (0.05, 0.9)


def grad_analytic_mean(pixel, g: Gaussian2D) -> np.ndarray:
    """∂I/∂μ аналитической схемы (через ∂ũx/∂μ = -v₁, ∂ũy/∂μ = -v₂)"""
    return shade_analytic(pixel, g, want_grad=True).d_mean


def grad_analytic_cov(pixel, g: Gaussian2D) -> SymMat2:
    """
    ∂I/∂Σ аналитической схемы через производные собственных значений и векторов

    Внедиагональный элемент агрегирует оба слота Σ₁₂. При λ₁ - λ₂ < 1e-8·max(λ₁, 1)
    вклад поворота собственного базиса отбрасывается.
    """
    return shade_analytic(pixel, g, want_grad=True).d_cov


def grad_center(pixel, g: Gaussian2D):
    """Отклик выборки в центре и его производные (стандартный обратный проход по конике)"""
    params = ShadingParams.prepare(g.cov.as_array(), ShadeScheme.center())
    d = np.asarray(pixel, dtype=np.float64) - g.mean
    response, grad = params.evaluate(np.array([0]), np.array([[d[0]]]), np.array([[d[1]]]), want_grad=True)
    values = [float(v[0, 0]) for v in grad]
    return float(response[0, 0]), np.array(values[:2]), SymMat2(*values[2:])


def grad_blend(pixel, sorted_gaussians: Sequence[Gaussian2D], upstream, scheme: Optional[ShadeScheme] = None,
               background=(0.0, 0.0, 0.0), options: Optional[RenderOptions] = None) -> List[GaussGrad]:
    """
    Градиенты цвета одного пикселя по параметрам гауссианов, отсортированных от ближнего к дальнему

    Args:
        pixel: Центр пикселя, px
        sorted_gaussians: Гауссианы в порядке смешивания
        upstream: dL/dC (3,)
        scheme: Схема шейдинга (по умолчанию аналитическая)
        background: Цвет фона
        options: Пороги смешивания

    Returns:
        Список GaussGrad в порядке входа
    """
    scheme = scheme or ShadeScheme.analytic()
    options = options or RenderOptions()
    batch = SplatBatch.from_gaussians(list(sorted_gaussians))
    if len(batch) == 0:
        return []
    params = ShadingParams.prepare(batch.cov, scheme)
    d = np.asarray(pixel, dtype=np.float64).reshape(2)
    dx = d[0] - batch.means[:, 0:1]
    dy = d[1] - batch.means[:, 1:2]
    response, grad = params.evaluate(np.arange(len(batch)), dx, dy, want_grad=True)
    alpha_raw = batch.opacity[:, None] * response
    _, _, _, state = composite(alpha_raw, batch.color, np.asarray(background, dtype=np.float64),
                               options.alpha_min, options.alpha_max, options.transmittance_min)
    d_alpha, d_colors = composite_backward(state, np.asarray(upstream, dtype=np.float64).reshape(1, 3))
    d_response = d_alpha[:, 0] * batch.opacity
    result = []
    for i in range(len(batch)):
        result.append(GaussGrad(
            d_mean=np.array([d_response[i] * grad[0][i, 0], d_response[i] * grad[1][i, 0]]),
            d_cov=SymMat2(*(float(d_response[i] * g[i, 0]) for g in grad[2:])),
            d_opacity=float(d_alpha[i, 0] * response[i, 0]),
            d_color=d_colors[i].copy(),
        ))
    return result


# ----- проверка градиентов -----

def random_splat_scene(count: int, seed: int, width: int = 16, height: int = 16) -> SplatBatch:
    """
    Случайная сцена сплатов для проверки градиентов

    σ ∈ [0.35, 3.5] с анизотропией ≥ 1.2, случайный поворот, непрозрачность
    [0.05, 0.9], различные глубины.
    """
    rng = make_rng(seed)
    means = rng.uniform(0.0, 1.0, (count, 2)) * np.array([width, height])
    sigma2 = rng.uniform(SCENE_SIGMA[0], SCENE_SIGMA[1] / SCENE_ANISOTROPY, count)
    sigma1 = rng.uniform(SCENE_ANISOTROPY * sigma2, SCENE_SIGMA[1])
    angle = rng.uniform(0.0, np.pi, count)
    c, s = np.cos(angle), np.sin(angle)
    l1, l2 = sigma1 ** 2, sigma2 ** 2
    cov = np.stack([l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c], axis=-1)
    opacity = rng.uniform(*SCENE_OPACITY, count)
    color = rng.uniform(0.0, 1.0, (count, 3))
    depth = 1.0 + rng.permutation(count).astype(np.float64)
    return SplatBatch(means, cov, opacity, color, depth)


@dataclass
class GradcheckReport:
    """Максимальные относительные ошибки градиентов по классам параметров"""

    seed: int
    count: int
    scheme: str
    errors: Dict[str, float] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(GRADCHECK_TOLERANCES))

    @property
    def passed(self) -> bool:
        return all(self.errors.get(name, 0.0) <= tol for name, tol in self.tolerances.items())

    def table(self) -> str:
        """Текстовая таблица отчета"""
        lines = [f"gradcheck: scheme={self.scheme} n={self.count} seed={self.seed}",
                 f"{'class':<10}{'max_rel_error':>16}{'tolerance':>12}  status"]
        for name, tol in self.tolerances.items():
            error = self.errors.get(name, 0.0)
            lines.append(f"{name:<10}{error:>16.3e}{tol:>12.0e}  {'ok' if error <= tol else 'FAIL'}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = float(np.max(np.abs(numeric))) if numeric.size else 0.0
    diff = float(np.max(np.abs(analytic - numeric))) if numeric.size else 0.0
    if scale == 0.0:
        return diff
    return diff / scale


def gradcheck(count: int, seed: int, scheme: Optional[ShadeScheme] = None, width: int = 16, height: int = 16,
              step: float = FD_STEP, scene: Optional[SplatBatch] = None) -> GradcheckReport:
    """
    Сравнение градиентов render_backward с центральными конечными разностями

    Функция потерь L = Σ ω·C со случайными весами ω ∈ [-1, 1]; рендер в гладком режиме
    (пороги смешивания - разрывы, которые конечные разности не перешагивают).

    Args:
        count: Число гауссианов случайной сцены
        seed: Зерно генератора
        scheme: Схема с обратным проходом (по умолчанию аналитическая)
        width, height: Разрешение
        step: Шаг конечных разностей
        scene: Готовая сцена вместо случайной

    Returns:
        GradcheckReport; провал - содержимое отчета, а не исключение
    """
    scheme = scheme or ShadeScheme.analytic()
    splats = scene if scene is not None else random_splat_scene(count, seed, width, height)
    options = RenderOptions.smooth(workers=1)
    weights = make_rng(seed + 1).uniform(-1.0, 1.0, (height, width, 3))
    report = GradcheckReport(seed, len(splats), scheme.label)
    if len(splats) == 0:
        return report

    def loss(batch: SplatBatch) -> float:
        image, _ = render_splats(batch, width, height, scheme, options=options)
        return float(np.sum(weights * image.pixels))

    _, record = render_splats(splats, width, height, scheme, options=options)
    grads = render_backward(record, weights)
    classes = {
        'mean': ('means', grads.d_means),
        'cov': ('cov', grads.d_cov),
        'opacity': ('opacity', grads.d_opacity),
        'color': ('color', grads.d_color),
    }
    for name, (attr, analytic) in classes.items():
        numeric = np.zeros_like(analytic)
        flat = numeric.reshape(-1)
        for k in range(flat.size):
            plus = splats.copy()
            minus = splats.copy()
            getattr(plus, attr).reshape(-1)[k] += step
            getattr(minus, attr).reshape(-1)[k] -= step
            flat[k] = (loss(plus) - loss(minus)) / (2.0 * step)
        report.errors[name] = _relative_error(analytic, numeric)
        logger.debug(f"gradcheck {name}: относительная ошибка {report.errors[name]:.3e}")
    logger.info(f"gradcheck n={len(splats)} seed={seed}: {'PASS' if report.passed else 'FAIL'}")
    return report
