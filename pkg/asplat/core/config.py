# -*- coding: utf-8 -*-
"""
Конфигурация asplat
"""

import os
import json
import logging


class Config:
    """Класс конфигурации рендерера и оптимизатора"""

    # Разбиение экрана на тайлы (px)
    TILE_SIZE = 16

    # Пороги смешивания (соглашения 3DGS)
    ALPHA_MIN = 1.0 / 255.0
    ALPHA_MAX = 0.99
    TRANSMITTANCE_MIN = 1e-4

    # Допустимый диапазон собственных значений экранной ковариации, px² (σ ∈ [0.3, 6.6])
    SIGMA2_MIN = 0.09
    SIGMA2_MAX = 43.56

    # Экранная дилатация базовой схемы CenterSample, px²
    DILATION = 0.3

    # Радиус отклика в единицах σ (99% доверительный интервал)
    RADIUS_SIGMAS = 3.0

    # Ближняя плоскость отсечения (единицы камеры)
    Z_NEAR = 0.01

    # σ ядра предфильтрации (Mip-Splatting)
    PREFILTER_SIGMA = 0.1

    # Число выборок Монте-Карло эталона
    MC_SAMPLES = 65536

    # Детерминированный режим: фиксированный порядок редукции по тайлам
    DETERMINISTIC = True

    # Переменная окружения, ограничивающая число потоков (0 = авто)
    THREADS_ENV = 'ASPLAT_THREADS'

    # Файл конфигурации относительно текущей рабочей директории
    CONFIG_FILE = 'config.json'

    # Ключи JSON, которые разрешено переопределять
    _TUNABLE = {
        'tile_size': 'TILE_SIZE',
        'alpha_min': 'ALPHA_MIN',
        'alpha_max': 'ALPHA_MAX',
        'transmittance_min': 'TRANSMITTANCE_MIN',
        'dilation': 'DILATION',
        'prefilter_sigma': 'PREFILTER_SIGMA',
        'radius_sigmas': 'RADIUS_SIGMAS',
        'deterministic': 'DETERMINISTIC',
    }

    @classmethod
    def worker_count(cls) -> int:
        """Число рабочих потоков с учетом ASPLAT_THREADS"""
        raw = os.getenv(cls.THREADS_ENV, '0').strip() or '0'
        try:
            requested = int(raw)
            if requested < 0:
                raise ValueError(raw)
        except ValueError:
            logging.getLogger('Config').warning(
                f"Некорректное значение {cls.THREADS_ENV}='{raw}', используется автоопределение")
            requested = 0
        if requested == 0:
            return os.cpu_count() or 1
        return requested

    @classmethod
    def to_dict(cls) -> dict:
        """Текущие настраиваемые параметры в виде словаря"""
        return {key: getattr(cls, attr) for key, attr in cls._TUNABLE.items()}

    @classmethod
    def save_config(cls, path: str = None):
        """Сохранить текущие настройки в JSON файл"""
        path = path or cls.CONFIG_FILE
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(cls.to_dict(), f, indent=4, ensure_ascii=False)
        logging.getLogger('Config').info(f"Конфигурация сохранена в {path}")

    @classmethod
    def load_config(cls, path: str = None) -> bool:
        """
        Загрузить настройки из JSON файла

        Args:
            path: Путь к файлу (по умолчанию config.json в рабочей директории)

        Returns:
            True если файл найден и применен
        """
        logger = logging.getLogger('Config')
        path = path or cls.CONFIG_FILE
        if not os.path.exists(path):
            logger.debug(f"Файл конфигурации {path} не найден, используются значения по умолчанию")
            return False
        try:
            with open(path, 'r', encoding='utf-8') as f:
                config_data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Ошибка загрузки конфигурации {path}: {e}")
            return False

        for key, value in config_data.items():
            attr = cls._TUNABLE.get(key)
            if attr is None:
                logger.warning(f"Неизвестный ключ конфигурации '{key}' проигнорирован")
                continue
            # Приводим к типу значения по умолчанию
            default = getattr(cls, attr)
            setattr(cls, attr, type(default)(value))
        logger.info(f"Конфигурация загружена из {path}")
        return True
