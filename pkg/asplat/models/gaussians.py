# -*- coding: utf-8 -*-
"""
Гауссовы примитивы: экранные 2D сплаты, мировые 3D гауссианы и их градиенты
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class SymMat2:
    """Симметричная матрица 2×2 (хранятся только три элемента), px²"""

    s11: float
    s12: float
    s22: float

    @property
    def det(self) -> float:
        return self.s11 * self.s22 - self.s12 * self.s12

    @property
    def trace(self) -> float:
        return self.s11 + self.s22

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]], dtype=np.float64)

    def as_array(self) -> np.ndarray:
        """Плоское представление (s11, s12, s22)"""
        return np.array([self.s11, self.s12, self.s22], dtype=np.float64)

    @classmethod
    def from_matrix(cls, m) -> 'SymMat2':
        m = np.asarray(m, dtype=np.float64)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @classmethod
    def from_array(cls, values: Sequence[float]) -> 'SymMat2':
        return cls(float(values[0]), float(values[1]), float(values[2]))

    @classmethod
    def identity(cls, scale: float = 1.0) -> 'SymMat2':
        return cls(float(scale), 0.0, float(scale))


@dataclass(frozen=True)
class Conic2:
    """Элементы обратной ковариации (a, b, c), 1/px²"""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class EigenDecomp2:
    """Собственное разложение симметричной 2×2 матрицы: λ₁ ≥ λ₂ ≥ 0, ортонормированные v₁, v₂"""

    lambda1: float
    lambda2: float
    v1: tuple
    v2: tuple

    @property
    def sigma1(self) -> float:
        return float(np.sqrt(self.lambda1))

    @property
    def sigma2(self) -> float:
        return float(np.sqrt(self.lambda2))

    def reconstruct(self) -> np.ndarray:
        """λ₁·v1v1ᵀ + λ₂·v2v2ᵀ"""
        v1 = np.asarray(self.v1)
        v2 = np.asarray(self.v2)
        return self.lambda1 * np.outer(v1, v1) + self.lambda2 * np.outer(v2, v2)


@dataclass
class Gaussian2D:
    """Экранный сплат - единица шейдинга"""

    mean: np.ndarray
    cov: SymMat2
    opacity: float = 1.0
    color: np.ndarray = field(default_factory=lambda: np.ones(3))
    depth: float = 1.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(2)
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)
        if not isinstance(self.cov, SymMat2):
            self.cov = SymMat2.from_matrix(self.cov)


@dataclass
class ShadeResult:
    """Отклик одного гауссиана в одном пикселе и (по запросу) его производные"""

    response: float
    d_mean: Optional[np.ndarray] = None
    d_cov: Optional[SymMat2] = None


@dataclass
class GaussGrad:
    """Градиенты скалярной функции потерь по параметрам одного 2D сплата"""

    d_mean: np.ndarray
    d_cov: SymMat2
    d_opacity: float
    d_color: np.ndarray


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class Gaussian3D:
    """Мировой гауссиан - единица оптимизации"""

    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    log_scales: np.ndarray = field(default_factory=lambda: np.zeros(3))
    opacity_logit: float = 0.0
    color: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        self.log_scales = np.asarray(self.log_scales, dtype=np.float64).reshape(3)
        self.opacity_logit = float(self.opacity_logit)
        self.color = np.asarray(self.color, dtype=np.float64).reshape(3)

    @property
    def opacity(self) -> float:
        return float(sigmoid(self.opacity_logit))

    @property
    def scales(self) -> np.ndarray:
        return np.exp(self.log_scales)

    def to_dict(self) -> Dict[str, Any]:
        """Сериализация в формат SceneFile"""
        return {
            'position': [float(v) for v in self.position],
            'quaternion': [float(v) for v in self.rotation],
            'log_scales': [float(v) for v in self.log_scales],
            'opacity_logit': float(self.opacity_logit),
            'color': [float(v) for v in self.color],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Gaussian3D':
        return cls(
            position=data['position'],
            rotation=data['quaternion'],
            log_scales=data['log_scales'],
            opacity_logit=data['opacity_logit'],
            color=data['color'],
        )


@dataclass
class SplatBatch:
    """
    Набор 2D сплатов в виде массивов - рабочий формат растеризатора

    means (N,2), cov (N,3) как (s11, s12, s22), opacity (N,), color (N,3), depth (N,)
    """

    means: np.ndarray
    cov: np.ndarray
    opacity: np.ndarray
    color: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        n = len(self.opacity)
        self.means = np.asarray(self.means, dtype=np.float64).reshape(n, 2)
        self.cov = np.asarray(self.cov, dtype=np.float64).reshape(n, 3)
        self.opacity = np.asarray(self.opacity, dtype=np.float64).reshape(n)
        self.color = np.asarray(self.color, dtype=np.float64).reshape(n, 3)
        self.depth = np.asarray(self.depth, dtype=np.float64).reshape(n)

    def __len__(self) -> int:
        return len(self.opacity)

    @classmethod
    def empty(cls) -> 'SplatBatch':
        return cls(np.zeros((0, 2)), np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)), np.zeros(0))

    @classmethod
    def from_gaussians(cls, gaussians: Sequence[Gaussian2D]) -> 'SplatBatch':
        if len(gaussians) == 0:
            return cls.empty()
        return cls(
            means=np.stack([g.mean for g in gaussians]),
            cov=np.stack([g.cov.as_array() for g in gaussians]),
            opacity=np.array([g.opacity for g in gaussians]),
            color=np.stack([g.color for g in gaussians]),
            depth=np.array([g.depth for g in gaussians]),
        )

    def to_gaussians(self) -> List[Gaussian2D]:
        return [
            Gaussian2D(self.means[i].copy(), SymMat2.from_array(self.cov[i]),
                       float(self.opacity[i]), self.color[i].copy(), float(self.depth[i]))
            for i in range(len(self))
        ]

    def copy(self) -> 'SplatBatch':
        return SplatBatch(self.means.copy(), self.cov.copy(), self.opacity.copy(),
                          self.color.copy(), self.depth.copy())

    def permuted(self, order: np.ndarray) -> 'SplatBatch':
        return SplatBatch(self.means[order], self.cov[order], self.opacity[order],
                          self.color[order], self.depth[order])


@dataclass
class SplatGrads:
    """Градиенты по параметрам SplatBatch в виде массивов"""

    d_means: np.ndarray
    d_cov: np.ndarray
    d_opacity: np.ndarray
    d_color: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> 'SplatGrads':
        return cls(np.zeros((n, 2)), np.zeros((n, 3)), np.zeros(n), np.zeros((n, 3)))

    def to_list(self) -> List[GaussGrad]:
        return [
            GaussGrad(self.d_means[i].copy(), SymMat2.from_array(self.d_cov[i]),
                      float(self.d_opacity[i]), self.d_color[i].copy())
            for i in range(len(self.d_opacity))
        ]


@dataclass
class GaussianParams:
    """
    Параметры набора 3D гауссианов в виде массивов - состояние оптимизатора

    positions (N,3), rotations (N,4) как (w,x,y,z), log_scales (N,3), opacity_logits (N,), colors (N,3)
    """

    positions: np.ndarray
    rotations: np.ndarray
    log_scales: np.ndarray
    opacity_logits: np.ndarray
    colors: np.ndarray

    # Имена классов параметров (совпадают с именами полей)
    FIELDS = ('positions', 'rotations', 'log_scales', 'opacity_logits', 'colors')

    def __post_init__(self):
        n = len(self.opacity_logits)
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(n, 3)
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(n, 4)
        self.log_scales = np.asarray(self.log_scales, dtype=np.float64).reshape(n, 3)
        self.opacity_logits = np.asarray(self.opacity_logits, dtype=np.float64).reshape(n)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(n, 3)

    def __len__(self) -> int:
        return len(self.opacity_logits)

    @classmethod
    def from_gaussians(cls, gaussians: Sequence[Gaussian3D]) -> 'GaussianParams':
        if len(gaussians) == 0:
            return cls(np.zeros((0, 3)), np.zeros((0, 4)), np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)))
        return cls(
            positions=np.stack([g.position for g in gaussians]),
            rotations=np.stack([g.rotation for g in gaussians]),
            log_scales=np.stack([g.log_scales for g in gaussians]),
            opacity_logits=np.array([g.opacity_logit for g in gaussians]),
            colors=np.stack([g.color for g in gaussians]),
        )

    def to_gaussians(self) -> List[Gaussian3D]:
        return [
            Gaussian3D(self.positions[i].copy(), self.rotations[i].copy(), self.log_scales[i].copy(),
                       float(self.opacity_logits[i]), self.colors[i].copy())
            for i in range(len(self))
        ]

    def copy(self) -> 'GaussianParams':
        return GaussianParams(*(getattr(self, name).copy() for name in self.FIELDS))

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.FIELDS}
