# -*- coding: utf-8 -*-
"""
Тайловый растеризатор: разбиение на тайлы, сортировка по глубине, смешивание,
ограничение собственных значений и обратный проход
"""

import logging
import math
import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.config import Config
from ..core.errors import DomainError, UnsupportedOperationError
from ..core.logging_config import TRACE_LEVEL
from ..core.parallel import map_ordered
from ..models.camera import Camera
from ..models.gaussians import Gaussian2D, Gaussian3D, GaussGrad, GaussianParams, SplatBatch, SplatGrads
from ..models.image import Image
from ..models.scheme import SchemeKind, ShadeScheme
from ..optim.metrics import psnr, ssim, SSIM_WINDOW
from ..optim.targets import box_downsample
from .blend import composite, composite_backward
from .gauss_core import eigendecompose_batch
from .project import Projection, project_batch, scale_camera
from .shading import ShadingParams

logger = logging.getLogger('Raster')

SORT_KEYS = ('index', 'position')


@dataclass
class RenderOptions:
    """Параметры растеризации (значения по умолчанию берутся из Config в момент создания)"""

    tile_size: int = field(default_factory=lambda: Config.TILE_SIZE)
    alpha_min: float = field(default_factory=lambda: Config.ALPHA_MIN)
    alpha_max: float = field(default_factory=lambda: Config.ALPHA_MAX)
    transmittance_min: float = field(default_factory=lambda: Config.TRANSMITTANCE_MIN)
    radius_sigmas: float = field(default_factory=lambda: Config.RADIUS_SIGMAS)
    dilation: float = field(default_factory=lambda: Config.DILATION)
    sigma2_min: float = field(default_factory=lambda: Config.SIGMA2_MIN)
    sigma2_max: float = field(default_factory=lambda: Config.SIGMA2_MAX)
    clamp_eigenvalues: bool = True
    deterministic: bool = field(default_factory=lambda: Config.DETERMINISTIC)
    sort_key: str = 'index'
    workers: Optional[int] = None

    def __post_init__(self):
        if self.sort_key not in SORT_KEYS:
            raise DomainError(f"Неизвестный ключ сортировки '{self.sort_key}', допустимы {SORT_KEYS}")
        if self.tile_size < 1:
            raise DomainError(f"Размер тайла должен быть ≥ 1, получено {self.tile_size}")

    @classmethod
    def smooth(cls, **overrides) -> 'RenderOptions':
        """Гладкий режим: без порога вклада, без раннего завершения и без обрезки радиуса"""
        params = dict(alpha_min=0.0, transmittance_min=0.0, radius_sigmas=math.inf)
        params.update(overrides)
        return cls(**params)


@dataclass
class TileList:
    """Списки индексов гауссианов по тайлам, в каждом - по возрастанию глубины"""

    tile_size: int
    width: int
    height: int
    lists: List[np.ndarray]

    @property
    def tiles_x(self) -> int:
        return -(-self.width // self.tile_size)

    @property
    def tiles_y(self) -> int:
        return -(-self.height // self.tile_size)

    def __len__(self) -> int:
        return len(self.lists)

    def __getitem__(self, tile: int) -> np.ndarray:
        return self.lists[tile]

    def rect(self, tile: int) -> Tuple[int, int, int, int]:
        """Пиксельный прямоугольник тайла (x0, x1, y0, y1), правые границы не включаются"""
        ty, tx = divmod(tile, self.tiles_x)
        x0 = tx * self.tile_size
        y0 = ty * self.tile_size
        return x0, min(self.width, x0 + self.tile_size), y0, min(self.height, y0 + self.tile_size)

    def tiles_of(self, index: int) -> List[int]:
        """Тайлы, в списках которых есть гауссиан index"""
        return [t for t, items in enumerate(self.lists) if np.any(items == index)]

    @property
    def entries(self) -> int:
        return int(sum(len(items) for items in self.lists))


def _as_batch(splats: Union[SplatBatch, Sequence[Gaussian2D]]) -> SplatBatch:
    return splats if isinstance(splats, SplatBatch) else SplatBatch.from_gaussians(list(splats))


def footprint_radius(cov: np.ndarray, radius_sigmas: float) -> np.ndarray:
    """radius_sigmas·√λ₁ для массива ковариаций (N,3)"""
    cov = np.asarray(cov, dtype=np.float64).reshape(-1, 3)
    half_gap = 0.5 * np.hypot(cov[:, 0] - cov[:, 2], 2.0 * cov[:, 1])
    lambda1 = np.maximum(0.5 * (cov[:, 0] + cov[:, 2]) + half_gap, 0.0)
    if math.isinf(radius_sigmas):
        return np.full(len(cov), math.inf)
    return radius_sigmas * np.sqrt(lambda1)


def depth_order(splats: SplatBatch, sort_key: str = 'index') -> np.ndarray:
    """
    Глобальный порядок по глубине

    'index' - равные глубины упорядочиваются по входному индексу,
    'position' - по координатам центра (не зависит от перестановки входа).
    """
    index = np.arange(len(splats))
    if sort_key == 'position':
        return np.lexsort((index, splats.means[:, 1], splats.means[:, 0], splats.depth))
    return np.lexsort((index, splats.depth))


def build_tiles(splats: Union[SplatBatch, Sequence[Gaussian2D]], resolution: Tuple[int, int],
                options: Optional[RenderOptions] = None, cov: Optional[np.ndarray] = None) -> TileList:
    """
    Распределить гауссианы по тайлам

    Гауссиан попадает во все тайлы, пересекающие квадрат [μ - r, μ + r], r = 3√λ₁.

    Args:
        splats: Сплаты
        resolution: (width, height)
        options: Параметры растеризации
        cov: Ковариации, задающие радиус (по умолчанию splats.cov)
    """
    splats = _as_batch(splats)
    options = options or RenderOptions()
    width, height = resolution
    size = options.tile_size
    tiles_x = -(-width // size)
    tiles_y = -(-height // size)
    buckets: List[List[int]] = [[] for _ in range(tiles_x * tiles_y)]
    if len(splats) == 0:
        return TileList(size, width, height, [np.zeros(0, dtype=np.int64) for _ in buckets])

    radius = footprint_radius(splats.cov if cov is None else cov, options.radius_sigmas)
    mx, my = splats.means[:, 0], splats.means[:, 1]
    visible = (mx + radius >= 0) & (mx - radius <= width) & (my + radius >= 0) & (my - radius <= height)
    x0 = np.floor(np.clip(mx - radius, 0, width) / size).astype(np.int64)
    x1 = np.minimum(np.floor(np.clip(mx + radius, 0, width) / size).astype(np.int64), tiles_x - 1)
    y0 = np.floor(np.clip(my - radius, 0, height) / size).astype(np.int64)
    y1 = np.minimum(np.floor(np.clip(my + radius, 0, height) / size).astype(np.int64), tiles_y - 1)

    for i in depth_order(splats, options.sort_key):
        if not visible[i]:
            continue
        for ty in range(y0[i], y1[i] + 1):
            row = ty * tiles_x
            for tx in range(x0[i], x1[i] + 1):
                buckets[row + tx].append(int(i))
    return TileList(size, width, height, [np.asarray(b, dtype=np.int64) for b in buckets])


# ----- ограничение собственных значений -----

@dataclass
class ClampCache:
    """Данные ограничения собственных значений для обратного прохода"""

    changed: np.ndarray    # (N,) bool - ковариация изменена
    lambdas: np.ndarray    # (M,2) собственные значения измененных
    vectors: np.ndarray    # (M,2,2) столбцы v1, v2
    low: float
    high: float


def clamp_covariance(cov: np.ndarray, low: float, high: float) -> Tuple[np.ndarray, ClampCache]:
    """
    Ограничить собственные значения ковариаций отрезком [low, high]

    Ковариации, чьи собственные значения уже в диапазоне, не меняются.

    Returns:
        (ограниченные ковариации (N,3), кэш для обратного прохода)
    """
    cov = np.asarray(cov, dtype=np.float64).reshape(-1, 3)
    if len(cov) == 0:
        return cov.copy(), ClampCache(np.zeros(0, dtype=bool), np.zeros((0, 2)), np.zeros((0, 2, 2)), low, high)
    lambda1, lambda2, v1, v2 = eigendecompose_batch(cov[:, 0], cov[:, 1], cov[:, 2])
    changed = (lambda1 > high) | (lambda2 < low)
    out = cov.copy()
    lambdas = np.stack([lambda1, lambda2], axis=-1)[changed]
    vectors = np.stack([v1, v2], axis=-1)[changed]
    if np.any(changed):
        clipped = np.clip(lambdas, low, high)
        full = vectors @ (clipped[:, :, None] * vectors.transpose(0, 2, 1))
        out[changed] = np.stack([full[:, 0, 0], full[:, 0, 1], full[:, 1, 1]], axis=-1)
    return out, ClampCache(changed, lambdas, vectors, low, high)


def clamp_covariance_backward(cache: ClampCache, d_cov: np.ndarray) -> np.ndarray:
    """
    Обратный проход ограничения: G_Σ = V·(D ∘ (Vᵀ·G·V))·Vᵀ,
    D_ij = (g(λi) - g(λj)) / (λi - λj), на диагонали и при λi = λj - g'(λi)

    Args:
        cache: Кэш прямого прохода
        d_cov: (N,3) градиенты по ограниченным ковариациям (s12 агрегирован)

    Returns:
        (N,3) градиенты по исходным ковариациям
    """
    d_cov = np.asarray(d_cov, dtype=np.float64).reshape(-1, 3)
    out = d_cov.copy()
    if not np.any(cache.changed):
        return out
    g = d_cov[cache.changed]
    full = np.empty((len(g), 2, 2))
    full[:, 0, 0] = g[:, 0]
    full[:, 0, 1] = full[:, 1, 0] = 0.5 * g[:, 1]
    full[:, 1, 1] = g[:, 2]

    lam = cache.lambdas
    clipped = np.clip(lam, cache.low, cache.high)
    slope = ((lam > cache.low) & (lam < cache.high)).astype(np.float64)
    gap = lam[:, 0] - lam[:, 1]
    distinct = gap > 1e-12 * np.maximum(lam[:, 0], 1.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        off = np.where(distinct, (clipped[:, 0] - clipped[:, 1]) / np.where(distinct, gap, 1.0), slope[:, 0])
    d = np.empty((len(g), 2, 2))
    d[:, 0, 0] = slope[:, 0]
    d[:, 1, 1] = slope[:, 1]
    d[:, 0, 1] = d[:, 1, 0] = off

    v = cache.vectors
    inner = v.transpose(0, 2, 1) @ full @ v
    result = v @ (d * inner) @ v.transpose(0, 2, 1)
    out[cache.changed] = np.stack([result[:, 0, 0], 2.0 * result[:, 0, 1], result[:, 1, 1]], axis=-1)
    return out


def shading_covariance(cov: np.ndarray, scheme: ShadeScheme,
                       options: RenderOptions) -> Tuple[np.ndarray, ClampCache]:
    """Ковариации для шейдинга: ограничение собственных значений, затем дилатация для CenterSample"""
    cov = np.asarray(cov, dtype=np.float64).reshape(-1, 3)
    if options.clamp_eigenvalues:
        cov, cache = clamp_covariance(cov, options.sigma2_min, options.sigma2_max)
    else:
        cache = ClampCache(np.zeros(len(cov), dtype=bool), np.zeros((0, 2)), np.zeros((0, 2, 2)), 0.0, math.inf)
    if scheme.kind is SchemeKind.CENTER and options.dilation:
        cov = cov + np.array([options.dilation, 0.0, options.dilation])
    return cov, cache


# ----- прямой проход -----

@dataclass
class BlendRecord:
    """Итог смешивания по пикселям и контекст, нужный обратному проходу"""

    transmittance: np.ndarray      # (H,W) итоговое пропускание
    contributors: np.ndarray       # (H,W) число учтенных гауссианов
    background: np.ndarray         # (3,)
    splats: SplatBatch
    scheme: ShadeScheme
    options: RenderOptions
    tiles: TileList
    shading: ShadingParams
    clamp: ClampCache
    projection: Optional[Projection] = None


def _tile_pixels(tiles: TileList, tile: int) -> Tuple[np.ndarray, np.ndarray, Tuple[int, int, int, int]]:
    x0, x1, y0, y1 = tiles.rect(tile)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    return xs.reshape(-1) + 0.5, ys.reshape(-1) + 0.5, (x0, x1, y0, y1)


def _tile_forward(record: BlendRecord, tile: int, want_grad: bool):
    idx = record.tiles[tile]
    px, py, rect = _tile_pixels(record.tiles, tile)
    splats = record.splats
    dx = px[None, :] - splats.means[idx, 0][:, None]
    dy = py[None, :] - splats.means[idx, 1][:, None]
    response, grad = record.shading.evaluate(idx, dx, dy, want_grad)
    alpha_raw = splats.opacity[idx][:, None] * response
    opts = record.options
    color, t_final, count, state = composite(alpha_raw, splats.color[idx], record.background,
                                             opts.alpha_min, opts.alpha_max, opts.transmittance_min)
    return idx, rect, response, grad, color, t_final, count, state


def render_splats(splats: Union[SplatBatch, Sequence[Gaussian2D]], width: int, height: int,
                  scheme: ShadeScheme, background=(0.0, 0.0, 0.0),
                  options: Optional[RenderOptions] = None) -> Tuple[Image, BlendRecord]:
    """
    Растеризация экранных сплатов

    Тайлы обрабатываются параллельно, внутри пикселя накопление строго от ближнего к дальнему.

    Args:
        splats: Экранные сплаты
        width, height: Разрешение, px
        scheme: Схема шейдинга
        background: Цвет фона
        options: Параметры растеризации

    Returns:
        (изображение, BlendRecord)
    """
    start = time.perf_counter()
    splats = _as_batch(splats)
    options = options or RenderOptions()
    background = np.asarray(background, dtype=np.float64).reshape(3)
    cov, clamp = shading_covariance(splats.cov, scheme, options)
    shading = ShadingParams.prepare(cov, scheme)
    tiles = build_tiles(splats, (width, height), options, cov=cov)

    pixels = np.empty((height, width, 3))
    transmittance = np.ones((height, width))
    contributors = np.zeros((height, width), dtype=np.int64)
    record = BlendRecord(transmittance, contributors, background, splats, scheme, options, tiles, shading, clamp)

    def work(tile):
        _, rect, _, _, color, t_final, count, _ = _tile_forward(record, tile, False)
        logger.log(TRACE_LEVEL, f"Тайл {tile}: {len(tiles[tile])} гауссианов")
        return rect, color, t_final, count

    for (x0, x1, y0, y1), color, t_final, count in map_ordered(work, range(len(tiles)), options.workers):
        shape = (y1 - y0, x1 - x0)
        pixels[y0:y1, x0:x1] = color.reshape(shape + (3,))
        transmittance[y0:y1, x0:x1] = t_final.reshape(shape)
        contributors[y0:y1, x0:x1] = count.reshape(shape)

    logger.debug(f"Рендер {width}x{height} ({scheme.label}): {len(splats)} сплатов, "
                 f"{tiles.entries} записей в {len(tiles)} тайлах, {time.perf_counter() - start:.3f} с")
    return Image(pixels), record


def render(gaussians: Union[GaussianParams, Sequence[Gaussian3D]], camera: Camera, scheme: ShadeScheme,
           background=(0.0, 0.0, 0.0), options: Optional[RenderOptions] = None) -> Tuple[Image, BlendRecord]:
    """Проекция 3D гауссианов и растеризация в разрешении камеры"""
    projection = project_batch(gaussians, camera)
    image, record = render_splats(projection.splats, camera.width, camera.height, scheme, background, options)
    record.projection = projection
    return image, record


# ----- обратный проход -----

def render_backward(record: BlendRecord, d_image) -> SplatGrads:
    """
    Градиенты функции потерь по параметрам экранных сплатов

    Прямой проход по тайлу повторяется, частичные суммы тайлов сводятся
    в порядке индексов тайлов (детерминированный режим) либо по мере готовности.

    Args:
        record: Запись прямого прохода
        d_image: (H,W,3) градиент функции потерь по изображению

    Returns:
        SplatGrads по входным сплатам (ковариации до ограничения и дилатации)

    Raises:
        UnsupportedOperationError: Схема без обратного прохода
    """
    if not record.scheme.has_backward:
        raise UnsupportedOperationError(f"Обратный проход не реализован для схемы {record.scheme.label}")
    d_image = np.asarray(d_image.pixels if isinstance(d_image, Image) else d_image, dtype=np.float64)
    n = len(record.splats)
    total = SplatGrads.zeros(n)

    def work(tile):
        idx, (x0, x1, y0, y1), response, grad, _, _, _, state = _tile_forward(record, tile, True)
        if len(idx) == 0:
            return None
        d_color_px = d_image[y0:y1, x0:x1].reshape(-1, 3)
        d_alpha, d_colors = composite_backward(state, d_color_px)
        opacity = record.splats.opacity[idx][:, None]
        d_response = d_alpha * opacity
        partial = (idx,
                   np.stack([np.sum(d_response * grad[0], axis=1), np.sum(d_response * grad[1], axis=1)], axis=-1),
                   np.stack([np.sum(d_response * g, axis=1) for g in grad[2:]], axis=-1),
                   np.sum(d_alpha * response, axis=1),
                   d_colors)
        return partial

    def accumulate(partial):
        if partial is None:
            return
        idx, d_means, d_cov, d_opacity, d_colors = partial
        np.add.at(total.d_means, idx, d_means)
        np.add.at(total.d_cov, idx, d_cov)
        np.add.at(total.d_opacity, idx, d_opacity)
        np.add.at(total.d_color, idx, d_colors)

    tiles = range(len(record.tiles))
    if record.options.deterministic:
        for partial in map_ordered(work, tiles, record.options.workers):
            accumulate(partial)
    else:
        lock = threading.Lock()

        def work_and_accumulate(tile):
            partial = work(tile)
            with lock:
                accumulate(partial)

        map_ordered(work_and_accumulate, tiles, record.options.workers)

    # Дилатация аддитивна и не меняет градиент
    total.d_cov = clamp_covariance_backward(record.clamp, total.d_cov)
    return total


def render_backward_list(record: BlendRecord, d_image) -> List[GaussGrad]:
    """render_backward в виде списка GaussGrad по сплатам"""
    return render_backward(record, d_image).to_list()


# ----- сравнение схем при уменьшении разрешения -----

@dataclass
class SchemeScore:
    """Качество схемы относительно уменьшенного эталона"""

    scheme: str
    psnr: float
    ssim: Optional[float]


def compare_schemes(gaussians: Union[GaussianParams, Sequence[Gaussian3D]], camera: Camera, factor: int,
                    schemes: Sequence[ShadeScheme], background=(0.0, 0.0, 0.0),
                    options: Optional[RenderOptions] = None) -> List[SchemeScore]:
    """
    Сравнение схем при уменьшении разрешения

    Эталон - рендер CenterSample в полном разрешении, уменьшенный box-фильтром в factor раз;
    каждая схема рендерится камерой, уменьшенной в factor раз.

    Args:
        gaussians: Сцена
        camera: Камера полного разрешения
        factor: Целый множитель уменьшения
        schemes: Сравниваемые схемы
        background: Цвет фона
        options: Параметры растеризации

    Returns:
        Список SchemeScore в порядке schemes (ssim None для изображений меньше окна SSIM)
    """
    factor = int(factor)
    if factor < 1:
        raise DomainError(f"Множитель уменьшения должен быть ≥ 1, получено {factor}")
    full, _ = render(gaussians, camera, ShadeScheme.center(), background, options)
    reference = box_downsample(full, factor)
    low_camera = scale_camera(camera, factor)

    scores = []
    for scheme in schemes:
        image, _ = render(gaussians, low_camera, scheme, background, options)
        small = min(image.width, image.height) < SSIM_WINDOW
        score = SchemeScore(scheme.label, psnr(image, reference), None if small else ssim(image, reference))
        logger.info(f"Схема {scheme.label} при уменьшении x{factor}: PSNR {score.psnr:.2f} дБ")
        scores.append(score)
    return scores
