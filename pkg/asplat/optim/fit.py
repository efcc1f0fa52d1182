# -*- coding: utf-8 -*-
"""
Подгонка набора 3D гауссианов к многомасштабным целевым изображениям

Функция потерь (1-λ)·L1 + λ·(1-SSIM), Adam по пяти классам параметров,
масштаб каждой итерации выбирается случайно с перевесом полного разрешения.
"""

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DomainError, UnsupportedOperationError
from ..models.camera import Camera, ScaleSet
from ..models.gaussians import Gaussian3D, GaussianParams
from ..models.image import Image
from ..models.scheme import ShadeScheme
from ..splatting.project import project_backward, scale_camera
from ..splatting.raster import RenderOptions, render, render_backward
from .adam import Adam
from .metrics import SSIM_WINDOW, psnr, ssim, ssim_with_grad
from .targets import make_multiscale_targets, make_rng

logger = logging.getLogger('Fit')

DEFAULT_LEARNING_RATES = {
    'positions': 2e-4,
    'rotations': 1e-3,
    'log_scales': 5e-3,
    'opacity_logits': 5e-2,
    'colors': 2.5e-3,
}

LAMBDA_DSSIM = 0.2
FULL_RESOLUTION_WEIGHT = 0.4


@dataclass
class FitConfig:
    """Параметры подгонки"""

    iterations: int = 1000
    learning_rates: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_LEARNING_RATES))
    lambda_dssim: float = LAMBDA_DSSIM
    scales: Tuple[ScaleSet, ...] = field(default_factory=ScaleSet.mtmt)
    seed: int = 0
    scheme: ShadeScheme = field(default_factory=ShadeScheme.analytic)
    full_resolution_weight: float = FULL_RESOLUTION_WEIGHT
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 0:
            raise DomainError(f"Число итераций должно быть ≥ 0, получено {self.iterations}")
        missing = set(GaussianParams.FIELDS) - set(self.learning_rates)
        if missing:
            raise DomainError(f"Не заданы шаги обучения для {sorted(missing)}")
        for name, lr in self.learning_rates.items():
            if not lr > 0:
                raise DomainError(f"Шаг обучения '{name}' должен быть положительным, получено {lr}")
        if not 0.0 <= self.lambda_dssim <= 1.0:
            raise DomainError(f"λ_dssim должна лежать в [0, 1], получено {self.lambda_dssim}")
        self.scales = tuple(s if isinstance(s, ScaleSet) else ScaleSet(float(s)) for s in self.scales)
        if not self.scales:
            raise DomainError("Пустой набор масштабов")

    def scale_weights(self, count: Optional[int] = None) -> np.ndarray:
        """Вероятности выбора масштабов: первый (полное разрешение) - 0.4, остальные делят 0.6"""
        count = count or len(self.scales)
        if count == 1:
            return np.ones(1)
        rest = (1.0 - self.full_resolution_weight) / (count - 1)
        return np.array([self.full_resolution_weight] + [rest] * (count - 1))


@dataclass
class ScaleMetrics:
    """PSNR и SSIM одного масштаба; ssim = None, если сторона меньше окна SSIM"""

    factor: float
    width: int
    height: int
    psnr: float
    ssim: Optional[float]

    def to_dict(self) -> Dict:
        return {
            'factor': self.factor,
            'width': self.width,
            'height': self.height,
            'psnr': 'identical' if math.isinf(self.psnr) else self.psnr,
            'ssim': self.ssim,
        }


@dataclass
class FitReport:
    """Трасса функции потерь, выбранные масштабы, итоговые метрики и время итераций"""

    scheme: str
    seed: int
    losses: List[float] = field(default_factory=list)
    scale_indices: List[int] = field(default_factory=list)
    iteration_seconds: List[float] = field(default_factory=list)
    metrics: List[ScaleMetrics] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.losses)

    def windowed_medians(self, split: int = 100) -> Tuple[float, float]:
        """Медианы потерь на итерациях [0, split) и [split, конец)"""
        head = self.losses[:split]
        tail = self.losses[split:]
        return (float(np.median(head)) if head else math.nan,
                float(np.median(tail)) if tail else math.nan)

    def to_csv(self) -> str:
        """Трасса: iteration,scale,loss (время не пишется - файл детерминирован)"""
        lines = ["iteration,scale,loss"]
        for i, (s, loss) in enumerate(zip(self.scale_indices, self.losses)):
            lines.append(f"{i},{s},{loss:.9g}")
        return "\n".join(lines) + "\n"

    def summary(self) -> Dict:
        return {
            'scheme': self.scheme,
            'seed': self.seed,
            'iterations': self.iterations,
            'final_loss': self.losses[-1] if self.losses else None,
            'scales': [m.to_dict() for m in self.metrics],
        }

    def save(self, trace_path, summary_path=None) -> None:
        """CSV трассы и JSON сводки (по умолчанию рядом: <trace>.json)"""
        trace_path = Path(trace_path)
        summary_path = Path(summary_path) if summary_path else trace_path.with_suffix('.json')
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        with open(trace_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.to_csv())
        with open(summary_path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.summary(), f, indent=2, ensure_ascii=False)
            f.write("\n")
        logger.info(f"Отчет подгонки сохранен: {trace_path}, {summary_path}")


def _as_params(gaussians: Union[GaussianParams, Sequence[Gaussian3D]]) -> GaussianParams:
    if isinstance(gaussians, GaussianParams):
        return gaussians.copy()
    return GaussianParams.from_gaussians(list(gaussians))


def _check_pairs(targets: Sequence[Image], cameras: Sequence[Camera]) -> None:
    if len(targets) != len(cameras):
        raise DomainError(f"Число целей ({len(targets)}) не совпадает с числом камер ({len(cameras)})")
    if not targets:
        raise DomainError("Пустой список целей")
    for k, (t, cam) in enumerate(zip(targets, cameras)):
        if (t.width, t.height) != cam.resolution:
            raise DomainError(f"Масштаб {k}: цель {t.width}x{t.height}, камера {cam.width}x{cam.height}")


def scale_cameras(camera: Camera, scales: Sequence[ScaleSet]) -> List[Camera]:
    """Камеры для набора масштабов"""
    return [scale_camera(camera, s) for s in scales]


def loss_and_grad(rendered: Image, target: Image, lambda_dssim: float) -> Tuple[float, np.ndarray]:
    """
    (1-λ)·L1 + λ·(1-SSIM) и градиент по отрендеренному изображению

    Если сторона меньше окна SSIM, используется только L1.
    """
    diff = rendered.pixels - target.pixels
    l1 = float(np.mean(np.abs(diff)))
    d_l1 = np.sign(diff) / diff.size
    if min(rendered.width, rendered.height) < SSIM_WINDOW or lambda_dssim == 0.0:
        return l1, d_l1
    value, d_ssim = ssim_with_grad(rendered, target)
    loss = (1.0 - lambda_dssim) * l1 + lambda_dssim * (1.0 - value)
    return loss, (1.0 - lambda_dssim) * d_l1 - lambda_dssim * d_ssim


def evaluate(gaussians: Union[GaussianParams, Sequence[Gaussian3D]], targets: Sequence[Image],
             cameras: Sequence[Camera], scheme: ShadeScheme,
             options: Optional[RenderOptions] = None, background=(0.0, 0.0, 0.0)) -> List[ScaleMetrics]:
    """PSNR и SSIM сцены на каждом масштабе"""
    _check_pairs(targets, cameras)
    params = _as_params(gaussians)
    result = []
    for target, cam in zip(targets, cameras):
        image, _ = render(params, cam, scheme, background, options)
        value = ssim(image, target) if min(cam.width, cam.height) >= SSIM_WINDOW else None
        factor = cameras[0].width / cam.width
        result.append(ScaleMetrics(factor, cam.width, cam.height, psnr(image, target), value))
    return result


def fit(targets: Sequence[Image], cameras: Sequence[Camera],
        init: Union[GaussianParams, Sequence[Gaussian3D]], cfg: FitConfig,
        options: Optional[RenderOptions] = None) -> Tuple[List[Gaussian3D], FitReport]:
    """
    Подгонка гауссианов к целям нескольких масштабов

    Args:
        targets: Цели по масштабам, полное разрешение первым
        cameras: Камеры тех же масштабов
        init: Начальная сцена
        cfg: Параметры подгонки
        options: Параметры растеризации

    Returns:
        (гауссианы, отчет); при cfg.iterations = 0 возвращается копия начальной сцены

    Raises:
        UnsupportedOperationError: Схема без обратного прохода
        DomainError: Несогласованные цели и камеры
    """
    if not cfg.scheme.has_backward:
        raise UnsupportedOperationError(f"Подгонка невозможна: нет обратного прохода для схемы {cfg.scheme.label}")
    _check_pairs(targets, cameras)
    params = _as_params(init)
    report = FitReport(cfg.scheme.label, cfg.seed)
    if cfg.iterations == 0:
        return params.to_gaussians(), report

    options = options or RenderOptions()
    rng = make_rng(cfg.seed)
    weights = cfg.scale_weights(len(targets))
    adam = Adam(cfg.learning_rates)
    logger.info(f"Подгонка: {len(params)} гауссианов, {len(targets)} масштабов, схема {cfg.scheme.label}, "
                f"{cfg.iterations} итераций, seed={cfg.seed}")

    for it in range(cfg.iterations):
        started = time.perf_counter()
        k = int(rng.choice(len(targets), p=weights))
        image, record = render(params, cameras[k], cfg.scheme, cfg.background, options)
        loss, d_image = loss_and_grad(image, targets[k], cfg.lambda_dssim)
        splat_grads = render_backward(record, d_image)
        grads = project_backward(record.projection.cache, splat_grads)
        adam.step(params.as_dict(), grads.as_dict())
        np.clip(params.colors, 0.0, 1.0, out=params.colors)

        report.losses.append(loss)
        report.scale_indices.append(k)
        report.iteration_seconds.append(time.perf_counter() - started)
        if not np.isfinite(loss):
            raise DomainError(f"Функция потерь стала нечисловой на итерации {it}")
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            logger.info(f"Итерация {it + 1}/{cfg.iterations}: loss={loss:.6f} (масштаб {k})")

    report.metrics = evaluate(params, targets, cameras, cfg.scheme, options, cfg.background)
    for m in report.metrics:
        ssim_text = f"{m.ssim:.4f}" if m.ssim is not None else "-"
        logger.info(f"x{m.factor:g} ({m.width}x{m.height}): PSNR {m.psnr:.2f} дБ, SSIM {ssim_text}")
    return params.to_gaussians(), report


def fit_image(image: Image, camera: Camera, init: Union[GaussianParams, Sequence[Gaussian3D]],
              cfg: FitConfig, options: Optional[RenderOptions] = None) -> Tuple[List[Gaussian3D], FitReport]:
    """Подгонка к одному изображению полного разрешения, уменьшенному до масштабов cfg.scales"""
    targets = make_multiscale_targets(image, cfg.scales)
    return fit(targets, scale_cameras(camera, cfg.scales), init, cfg, options)
