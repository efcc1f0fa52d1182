# -*- coding: utf-8 -*-
"""
JSON форматы сцены и камеры
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Union

import numpy as np

from ..core.errors import SceneFormatError
from .camera import Camera
from .gaussians import Gaussian3D

logger = logging.getLogger('SceneFile')

PathLike = Union[str, Path]


def _vector(data: dict, key: str, length: int, where: str) -> np.ndarray:
    name = f"{where}.{key}" if where else key
    if key not in data:
        raise SceneFormatError(f"Отсутствует поле '{name}'", field=name)
    value = data[key]
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise SceneFormatError(f"Поле '{name}' должно быть массивом из {length} чисел", field=name)
    try:
        array = np.array([float(v) for v in value], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise SceneFormatError(f"Поле '{name}' содержит нечисловое значение: {e}", field=name) from e
    if not np.all(np.isfinite(array)):
        raise SceneFormatError(f"Поле '{name}' содержит нечисловое значение", field=name)
    return array


def _scalar(data: dict, key: str, where: str = '') -> float:
    name = f"{where}.{key}" if where else key
    if key not in data:
        raise SceneFormatError(f"Отсутствует поле '{name}'", field=name)
    try:
        value = float(data[key])
    except (TypeError, ValueError) as e:
        raise SceneFormatError(f"Поле '{name}' должно быть числом: {e}", field=name) from e
    if not np.isfinite(value):
        raise SceneFormatError(f"Поле '{name}' должно быть конечным числом", field=name)
    return value


def _read_json(path: PathLike) -> Any:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise SceneFormatError(f"{path}: некорректный JSON: {e}", field='json') from e


@dataclass
class SceneFile:
    """Сцена: список 3D гауссианов и цвет фона"""

    gaussians: List[Gaussian3D] = field(default_factory=list)
    background: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.background = np.asarray(self.background, dtype=np.float64).reshape(3)

    def to_dict(self) -> dict:
        return {
            'gaussians': [g.to_dict() for g in self.gaussians],
            'background': [float(v) for v in self.background],
        }

    @classmethod
    def from_dict(cls, data: Any) -> 'SceneFile':
        """Разбор документа сцены; кватернионы нормализуются"""
        if not isinstance(data, dict):
            raise SceneFormatError("Документ сцены должен быть JSON объектом", field='root')
        items = data.get('gaussians')
        if not isinstance(items, list):
            raise SceneFormatError("Поле 'gaussians' должно быть массивом", field='gaussians')
        gaussians = []
        for i, item in enumerate(items):
            where = f"gaussians[{i}]"
            if not isinstance(item, dict):
                raise SceneFormatError(f"Элемент '{where}' должен быть объектом", field=where)
            quaternion = _vector(item, 'quaternion', 4, where)
            norm = np.linalg.norm(quaternion)
            if norm == 0.0:
                raise SceneFormatError(f"Нулевой кватернион в '{where}'", field=f"{where}.quaternion")
            gaussians.append(Gaussian3D(
                position=_vector(item, 'position', 3, where),
                rotation=quaternion / norm,
                log_scales=_vector(item, 'log_scales', 3, where),
                opacity_logit=_scalar(item, 'opacity_logit', where),
                color=_vector(item, 'color', 3, where),
            ))
        background = _vector(data, 'background', 3, '') if 'background' in data else np.zeros(3)
        return cls(gaussians, background)

    @classmethod
    def load(cls, path: PathLike) -> 'SceneFile':
        scene = cls.from_dict(_read_json(path))
        logger.info(f"Загружена сцена {path}: {len(scene.gaussians)} гауссианов")
        return scene

    def save(self, path: PathLike) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write('\n')
        logger.info(f"Сцена сохранена в {path} ({len(self.gaussians)} гауссианов)")


class CameraFile:
    """JSON документ камеры: extrinsic (16 чисел по строкам), fx, fy, cx, cy, width, height"""

    @staticmethod
    def from_dict(data: Any) -> Camera:
        if not isinstance(data, dict):
            raise SceneFormatError("Документ камеры должен быть JSON объектом", field='root')
        extrinsic = _vector(data, 'extrinsic', 16, '') if 'extrinsic' in data else np.eye(4).reshape(-1)
        intrinsics = {key: _scalar(data, key) for key in ('fx', 'fy', 'cx', 'cy')}
        for key in ('fx', 'fy'):
            if intrinsics[key] <= 0:
                raise SceneFormatError(f"Поле '{key}' должно быть положительным", field=key)
        size = {}
        for key in ('width', 'height'):
            value = _scalar(data, key)
            if value != int(value) or value < 1:
                raise SceneFormatError(f"Поле '{key}' должно быть положительным целым", field=key)
            size[key] = int(value)
        return Camera(extrinsic=extrinsic.reshape(4, 4), **intrinsics, **size)

    @staticmethod
    def load(path: PathLike) -> Camera:
        return CameraFile.from_dict(_read_json(path))

    @staticmethod
    def save(camera: Camera, path: PathLike) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(camera.to_dict(), f, indent=2)
            f.write('\n')
