# -*- coding: utf-8 -*-
"""
RGB изображение и его чтение/запись в форматах PPM (P6) и PFM
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DomainError, SceneFormatError

logger = logging.getLogger('Image')

PathLike = Union[str, Path]


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Линейные значения [0,1] → sRGB"""
    x = np.clip(linear, 0.0, 1.0)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1.0 / 2.4) - 0.055)


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    """sRGB [0,1] → линейные значения"""
    x = np.clip(encoded, 0.0, 1.0)
    return np.where(x <= 0.04045, x / 12.92, np.power((x + 0.055) / 1.055, 2.4))


@dataclass
class Image:
    """Изображение (height, width, 3), значения float64, строки сверху вниз"""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise DomainError(f"Изображение должно иметь форму (H, W, 3), получено {self.pixels.shape}")
        if not np.all(np.isfinite(self.pixels)):
            raise DomainError("Изображение содержит нечисловые значения")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        """(width, height)"""
        return self.width, self.height

    @classmethod
    def constant(cls, width: int, height: int, color: Sequence[float]) -> 'Image':
        pixels = np.empty((height, width, 3), dtype=np.float64)
        pixels[:] = np.asarray(color, dtype=np.float64).reshape(3)
        return cls(pixels)

    def copy(self) -> 'Image':
        return Image(self.pixels.copy())

    # ----- PPM -----

    def write_ppm(self, path: PathLike, srgb: bool = False) -> None:
        """
        Записать 8-битный бинарный PPM (P6)

        Args:
            path: Путь к файлу
            srgb: Кодировать линейные значения передаточной функцией sRGB
        """
        values = srgb_encode(self.pixels) if srgb else np.clip(self.pixels, 0.0, 1.0)
        data = np.round(values * 255.0).astype(np.uint8)
        with open(path, 'wb') as f:
            f.write(f"P6\n{self.width} {self.height}\n255\n".encode('ascii'))
            f.write(data.tobytes())
        logger.debug(f"Записан PPM {path} ({self.width}x{self.height}, srgb={srgb})")

    @classmethod
    def read_ppm(cls, path: PathLike, srgb: bool = False) -> 'Image':
        """Прочитать бинарный PPM (P6, maxval ≤ 65535)"""
        with open(path, 'rb') as f:
            magic = _read_token(f)
            if magic != b'P6':
                raise SceneFormatError(f"{path}: ожидался заголовок P6, получено {magic!r}", field='magic')
            try:
                width = int(_read_token(f))
                height = int(_read_token(f))
                maxval = int(_read_token(f))
            except ValueError as e:
                raise SceneFormatError(f"{path}: некорректный заголовок PPM: {e}", field='header') from e
            if width < 1 or height < 1 or not 0 < maxval < 65536:
                raise SceneFormatError(f"{path}: недопустимые размеры {width}x{height} или maxval {maxval}",
                                       field='header')
            dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
            count = width * height * 3
            raw = np.frombuffer(f.read(count * dtype.itemsize), dtype=dtype)
        if raw.size != count:
            raise SceneFormatError(f"{path}: файл обрезан ({raw.size} из {count} значений)", field='pixels')
        values = raw.astype(np.float64).reshape(height, width, 3) / maxval
        return cls(srgb_decode(values) if srgb else values)

    # ----- PFM -----

    def write_pfm(self, path: PathLike) -> None:
        """Записать трехканальный PFM: float32, little-endian (масштаб -1), строки снизу вверх"""
        data = np.flipud(self.pixels).astype('<f4')
        with open(path, 'wb') as f:
            f.write(f"PF\n{self.width} {self.height}\n-1.0\n".encode('ascii'))
            f.write(data.tobytes())
        logger.debug(f"Записан PFM {path} ({self.width}x{self.height})")

    @classmethod
    def read_pfm(cls, path: PathLike) -> 'Image':
        """Прочитать PFM ('PF' - RGB, 'Pf' - оттенки серого, размножаются в три канала)"""
        with open(path, 'rb') as f:
            magic = _read_token(f)
            if magic not in (b'PF', b'Pf'):
                raise SceneFormatError(f"{path}: ожидался заголовок PF/Pf, получено {magic!r}", field='magic')
            try:
                width = int(_read_token(f))
                height = int(_read_token(f))
                scale = float(_read_token(f))
            except ValueError as e:
                raise SceneFormatError(f"{path}: некорректный заголовок PFM: {e}", field='header') from e
            channels = 3 if magic == b'PF' else 1
            dtype = np.dtype('<f4') if scale < 0 else np.dtype('>f4')
            count = width * height * channels
            raw = np.frombuffer(f.read(count * 4), dtype=dtype)
        if raw.size != count:
            raise SceneFormatError(f"{path}: файл обрезан ({raw.size} из {count} значений)", field='pixels')
        values = np.flipud(raw.astype(np.float64).reshape(height, width, channels))
        if channels == 1:
            values = np.repeat(values, 3, axis=2)
        return cls(values)

    # ----- по расширению -----

    def save(self, path: PathLike, fmt: str = None, srgb: bool = False) -> None:
        """Сохранить в формате fmt ('ppm' | 'pfm'), по умолчанию по расширению файла"""
        fmt = (fmt or Path(path).suffix.lstrip('.') or 'ppm').lower()
        if fmt == 'pfm':
            self.write_pfm(path)
        elif fmt == 'ppm':
            self.write_ppm(path, srgb=srgb)
        else:
            raise DomainError(f"Неподдерживаемый формат изображения '{fmt}' (допустимы ppm, pfm)")

    @classmethod
    def load(cls, path: PathLike, srgb: bool = False) -> 'Image':
        """Загрузить PPM или PFM по расширению файла"""
        if Path(path).suffix.lower() == '.pfm':
            return cls.read_pfm(path)
        return cls.read_ppm(path, srgb=srgb)


def _read_token(f: BinaryIO) -> bytes:
    """Следующий токен заголовка Netpbm, комментарии '#' пропускаются"""
    token = b''
    while True:
        ch = f.read(1)
        if not ch:
            return token
        if ch == b'#' and not token:
            f.readline()
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch
