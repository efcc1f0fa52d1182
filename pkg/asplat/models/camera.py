# -*- coding: utf-8 -*-
"""
Камера-обскура и набор масштабов MTMT
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from ..core.errors import DomainError

# Множители разрешения протокола multi-scale training / multi-scale testing
MTMT_FACTORS = (1, 2, 4, 8)


@dataclass
class Camera:
    """
    Камера: внешняя матрица (мир → камера), фокусы и главная точка в пикселях, разрешение

    Ось z камеры направлена от наблюдателя, пиксель (i, j) имеет центр (i+0.5, j+0.5).
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        self.fx = float(self.fx)
        self.fy = float(self.fy)
        self.cx = float(self.cx)
        self.cy = float(self.cy)
        self.width = int(self.width)
        self.height = int(self.height)
        self.extrinsic = np.asarray(self.extrinsic, dtype=np.float64).reshape(4, 4)

    @property
    def rotation(self) -> np.ndarray:
        """Матрица поворота W (мир → камера)"""
        return self.extrinsic[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.extrinsic[:3, 3]

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.width, self.height

    def to_dict(self) -> Dict[str, Any]:
        """Сериализация в формат CameraFile"""
        return {
            'extrinsic': [float(v) for v in self.extrinsic.reshape(-1)],
            'fx': self.fx,
            'fy': self.fy,
            'cx': self.cx,
            'cy': self.cy,
            'width': self.width,
            'height': self.height,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Camera':
        return cls(
            fx=data['fx'], fy=data['fy'], cx=data['cx'], cy=data['cy'],
            width=data['width'], height=data['height'],
            extrinsic=np.asarray(data.get('extrinsic', np.eye(4).reshape(-1)), dtype=np.float64),
        )


@dataclass(frozen=True)
class ScaleSet:
    """Делитель разрешения (1, 2, 4, 8 для MTMT; 0.5 - суперразрешение)"""

    factor: float = 1.0

    def __post_init__(self):
        if not self.factor > 0:
            raise DomainError(f"Множитель масштаба должен быть положительным, получено {self.factor}")

    @property
    def is_mtmt(self) -> bool:
        return self.factor in MTMT_FACTORS

    @classmethod
    def mtmt(cls) -> Tuple['ScaleSet', ...]:
        return tuple(cls(float(k)) for k in MTMT_FACTORS)
