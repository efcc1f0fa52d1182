# -*- coding: utf-8 -*-
"""
Пул рабочих потоков для независимых задач (тайлы, точки кривых ошибок)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from .config import Config
from .logging_config import TRACE_LEVEL

T = TypeVar('T')
R = TypeVar('R')

logger = logging.getLogger('Parallel')


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Применить fn ко всем элементам, сохраняя порядок результатов

    Порядок результатов совпадает с порядком входа при любом числе потоков,
    поэтому последующая редукция детерминирована.

    Args:
        fn: Чистая функция одного элемента
        items: Элементы
        workers: Число потоков (None - Config.worker_count())

    Returns:
        Список результатов в порядке входа
    """
    items = list(items)
    if workers is None:
        workers = Config.worker_count()
    workers = max(1, min(workers, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    logger.log(TRACE_LEVEL, f"Запуск {len(items)} задач на {workers} потоках")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
