"""
Централизованное управление настройками логирования для asplat.

Модуль предоставляет разбор уровней логирования из командной строки
и настройку глобального логгера с пятью предопределенными уровнями:
- minimal: WARNING и выше (тихий режим по умолчанию для консоли)
- concise: INFO и выше (ход оптимизации, время рендера)
- full: DEBUG и выше (отладочная информация)
- trace: TRACE и выше (детализация по тайлам)
- none: ничего не логируется; для файла - файл сессии не создается
"""

import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

# Один TRACE уровень ниже DEBUG
TRACE_LEVEL = 5
logging.addLevelName(TRACE_LEVEL, 'TRACE')

# NONE уровень выше CRITICAL - ничего не логируется
NONE_LEVEL = logging.CRITICAL + 10

LOG_LEVELS = {
    'minimal': logging.WARNING,    # 30
    'concise': logging.INFO,       # 20
    'full': logging.DEBUG,         # 10
    'trace': TRACE_LEVEL,          # 5
    'none': NONE_LEVEL             # 60
}

# Старые имена уровней
LEVEL_ALIASES = {
    'debug': 'full',
    'info': 'concise',
    'warning': 'minimal',
    'error': 'minimal',
    'critical': 'minimal'
}

DEFAULT_CONSOLE_LEVEL = 'minimal'
DEFAULT_FILE_LEVEL = 'none'

CONSOLE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Handlers, установленные configure_logging (для повторной настройки и финализации)
_installed_handlers = []
_session_file_handler = None


class MillisecondsFormatter(logging.Formatter):
    """Formatter с миллисекундами в таймстампах (%f обрезается до миллисекунд)"""

    def formatTime(self, record, datefmt=None):
        if datefmt and '%f' in datefmt:
            ct = self.converter(record.created)
            separator = ',' if ',' in datefmt else '.'
            base_str = time.strftime(datefmt.replace(',', '').replace('%f', ''), ct)
            return base_str + separator + '%03d' % record.msecs
        return super().formatTime(record, datefmt)


class LoggingStatsHandler(logging.FileHandler):
    """FileHandler с подсчетом сообщений по уровням"""

    def __init__(self, filename, mode='a', encoding='utf-8'):
        super().__init__(filename, mode=mode, encoding=encoding)
        self.message_counts: Dict[str, int] = {}
        self.setFormatter(MillisecondsFormatter(fmt=CONSOLE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S,%f'))

    def emit(self, record):
        level_name = getattr(record, 'levelname', str(record.levelno))
        self.message_counts[level_name] = self.message_counts.get(level_name, 0) + 1
        super().emit(record)

    def get_statistics(self) -> Dict[str, int]:
        """Статистика сообщений по уровням"""
        return self.message_counts.copy()


def normalize_level(level_str: str, default: str) -> str:
    """
    Привести имя уровня к одному из LOG_LEVELS

    Args:
        level_str: Имя уровня или его старый синоним
        default: Уровень, используемый для неизвестных имен

    Returns:
        Имя уровня из LOG_LEVELS
    """
    level_str = (level_str or '').lower()
    if level_str in LOG_LEVELS:
        return level_str
    if level_str in LEVEL_ALIASES:
        return LEVEL_ALIASES[level_str]
    print(
        f"Предупреждение: неподдерживаемый уровень логирования '{level_str}'. "
        f"Используется '{default}'. Допустимые значения: {', '.join(LOG_LEVELS.keys())}",
        file=sys.stderr
    )
    return default


def get_logging_level_from_string(level_str: str) -> int:
    """
    Преобразует строку уровня логирования в уровень logging

    Raises:
        ValueError: Если передана неподдерживаемая строка уровня
    """
    if level_str not in LOG_LEVELS:
        raise ValueError(
            f"Неподдерживаемый уровень логирования: '{level_str}'. "
            f"Допустимые значения: {', '.join(LOG_LEVELS.keys())}"
        )
    return LOG_LEVELS[level_str]


def add_logging_arguments(parser: argparse.ArgumentParser) -> None:
    """Добавить в парсер опции --logging, --console-logging, --file-logging и --log-dir"""
    group = parser.add_argument_group('logging')
    group.add_argument('--logging', '--log-level', dest='logging', default=None,
                       help="уровень для консоли и файла: " + ', '.join(LOG_LEVELS))
    group.add_argument('--console-logging', dest='console_logging', default=None,
                       help=f"уровень консоли (по умолчанию {DEFAULT_CONSOLE_LEVEL})")
    group.add_argument('--file-logging', dest='file_logging', default=None,
                       help=f"уровень файла сессии (по умолчанию {DEFAULT_FILE_LEVEL})")
    group.add_argument('--log-dir', dest='log_dir', default='logs',
                       help="директория файлов сессий")


def levels_from_namespace(args: argparse.Namespace) -> Tuple[str, str]:
    """Уровни (консоль, файл) из разобранных аргументов argparse"""
    if getattr(args, 'logging', None):
        level = normalize_level(args.logging, DEFAULT_CONSOLE_LEVEL)
        return level, level
    console = normalize_level(args.console_logging, DEFAULT_CONSOLE_LEVEL) \
        if getattr(args, 'console_logging', None) else DEFAULT_CONSOLE_LEVEL
    file_level = normalize_level(args.file_logging, DEFAULT_FILE_LEVEL) \
        if getattr(args, 'file_logging', None) else DEFAULT_FILE_LEVEL
    return console, file_level


def parse_logging_args(args: Optional[Sequence[str]] = None) -> Tuple[str, str]:
    """
    Разбор уровней логирования из произвольного списка аргументов

    Остальные аргументы игнорируются, поэтому функцию можно вызвать
    до полноценного разбора командной строки.

    Args:
        args: Список аргументов (по умолчанию sys.argv[1:])

    Returns:
        Кортеж (console_level, file_level)
    """
    if args is None:
        args = sys.argv[1:]
    parser = argparse.ArgumentParser(add_help=False)
    add_logging_arguments(parser)
    known, _ = parser.parse_known_args(list(args))
    return levels_from_namespace(known)


def generate_session_filename(now: Optional[datetime] = None) -> str:
    """
    Имя файла сессии по текущему времени UTC

    Returns:
        Имя файла в формате 'session_dd-mm-YYYY_HH-MM-SS.log'
    """
    now = now or datetime.now(timezone.utc)
    return f"session_{now.strftime('%d-%m-%Y_%H-%M-%S')}.log"


def configure_logging(console_level: str = DEFAULT_CONSOLE_LEVEL,
                      file_level: str = DEFAULT_FILE_LEVEL,
                      log_dir: str = 'logs',
                      stream=None) -> Optional[Path]:
    """
    Настраивает глобальное логирование с разделением по выходам

    Повторный вызов заменяет handlers, установленные предыдущим вызовом.

    Args:
        console_level: Уровень логирования для консоли
        file_level: Уровень логирования для файла сессии ('none' - без файла)
        log_dir: Директория для файлов сессий
        stream: Поток консольного вывода (по умолчанию sys.stderr)

    Returns:
        Путь к файлу сессии или None
    """
    global _session_file_handler

    logger = logging.getLogger()
    for handler in _installed_handlers:
        logger.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()
    _session_file_handler = None

    logger.setLevel(TRACE_LEVEL)

    console_handler = logging.StreamHandler(stream or sys.stderr)
    console_handler.setLevel(get_logging_level_from_string(console_level))
    console_handler.setFormatter(MillisecondsFormatter(fmt=CONSOLE_FORMAT, datefmt='%H:%M:%S,%f'))
    logger.addHandler(console_handler)
    _installed_handlers.append(console_handler)

    if file_level == 'none':
        return None

    directory = Path(log_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"Предупреждение: не удалось создать директорию {directory}: {e}. "
              f"Логи будут записываться в текущую директорию.", file=sys.stderr)
        directory = Path('.')

    session_file_path = directory / generate_session_filename()
    try:
        file_handler = LoggingStatsHandler(session_file_path, encoding='utf-8')
    except OSError as e:
        print(f"Ошибка: не удалось создать файл логов {session_file_path}: {e}", file=sys.stderr)
        return None

    file_handler.setLevel(get_logging_level_from_string(file_level))
    logger.addHandler(file_handler)
    _installed_handlers.append(file_handler)
    _session_file_handler = file_handler

    session_logger = logging.getLogger('ASPLAT.Session')
    session_logger.info(f"Session started - console: {console_level}, file: {file_level}")
    session_logger.info(f"Log file: {session_file_path.absolute()}")
    return session_file_path


def _level_rank(level_name: str) -> int:
    level = logging.getLevelName(level_name)
    return level if isinstance(level, int) else 999


def finalize_session() -> None:
    """
    Записывает время завершения сессии и статистику сообщений в файл сессии

    Запись выполняется независимо от уровня файла. Ошибки финализации
    выводятся в stderr и не пробрасываются.
    """
    global _session_file_handler

    handler = _session_file_handler
    if handler is None:
        return

    try:
        end_logger = logging.getLogger('ASPLAT.Session.End')
        end_logger.handlers.clear()
        end_logger.addHandler(handler)
        end_logger.setLevel(TRACE_LEVEL)
        end_logger.propagate = False
        handler.setLevel(TRACE_LEVEL)

        stats = handler.get_statistics()
        end_logger.info("=" * 60)
        if stats:
            end_logger.info("Session Statistics:")
            end_logger.info("LEVEL      | COUNT")
            end_logger.info("-" * 18)
            for level_name, count in sorted(stats.items(), key=lambda x: (_level_rank(x[0]), x[0])):
                end_logger.info(f"{level_name:<10} | {count}")
            end_logger.info("-" * 18)
            end_logger.info(f"TOTAL      | {sum(stats.values())}")
        else:
            end_logger.info("No messages were logged during this session.")
        end_logger.info("=" * 60)

        now = datetime.now(timezone.utc)
        end_logger.info(f"Session ended at {now.strftime('%Y-%m-%d %H:%M:%S,%f')[:-3]}")
        end_logger.removeHandler(handler)
    except Exception as e:
        print(f"Предупреждение: ошибка при финализации логов сессии: {e}", file=sys.stderr)
    finally:
        root = logging.getLogger()
        root.removeHandler(handler)
        if handler in _installed_handlers:
            _installed_handlers.remove(handler)
        handler.close()
        _session_file_handler = None
