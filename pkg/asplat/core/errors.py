# -*- coding: utf-8 -*-
"""
Исключения asplat и их соответствие кодам завершения CLI
"""


class AsplatError(Exception):
    """Базовое исключение пакета"""

    exit_code = 1


class DomainError(AsplatError, ValueError):
    """Аргумент вне области определения (σ ≤ 0, не PSD матрица, вырожденная ковариация...)"""

    exit_code = 2


class SceneFormatError(AsplatError, ValueError):
    """Ошибка разбора файла сцены, камеры или изображения"""

    exit_code = 2

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class UnsupportedOperationError(AsplatError, NotImplementedError):
    """Операция не реализована для выбранной схемы шейдинга"""

    exit_code = 4


# Коды завершения CLI
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_INPUT = 2
EXIT_IO = 3
EXIT_UNSUPPORTED = 4


def exit_code_for(error: BaseException) -> int:
    """
    Код завершения для исключения

    Args:
        error: Перехваченное исключение

    Returns:
        Код завершения CLI
    """
    if isinstance(error, AsplatError):
        return error.exit_code
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_FAILURE
