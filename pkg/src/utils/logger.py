"""
日志工具模块

提供统一的日志记录功能
"""

import sys
import time
import logging
import threading
from functools import wraps
from typing import Optional, Dict, Any
from pathlib import Path
from logging.handlers import RotatingFileHandler

import colorlog


# 全局日志配置
_LOGGER_INSTANCES: Dict[str, logging.Logger] = {}
_LOGGER_LOCK = threading.Lock()
_DEFAULT_CONFIG: Dict[str, Any] = {
    "level": "INFO",
    "file": "./logs/invmpc.log",
    "rotation": "20 MB",
    "backup_count": 5,
    "console_output": True,
    "file_output": False
}

_LINE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s:%(funcName)s:%(lineno)d - %(message)s"
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(config: Optional[Dict[str, Any]] = None) -> None:
    """设置全局日志配置

    已创建的日志记录器会按新配置重建处理器。

    Args:
        config: 日志配置字典，对应配置文件中的 logging 段
    """
    if config:
        _DEFAULT_CONFIG.update(config)

    if _DEFAULT_CONFIG.get("file_output", False):
        # 创建日志目录
        log_file = Path(_DEFAULT_CONFIG["file"])
        log_file.parent.mkdir(parents=True, exist_ok=True)

    with _LOGGER_LOCK:
        for logger in _LOGGER_INSTANCES.values():
            _configure_handlers(logger)


def get_logger(name: str) -> logging.Logger:
    """获取日志记录器

    Args:
        name: 日志记录器名称

    Returns:
        日志记录器实例
    """
    with _LOGGER_LOCK:
        if name in _LOGGER_INSTANCES:
            return _LOGGER_INSTANCES[name]

        logger = logging.getLogger(name)
        logger.propagate = False
        _configure_handlers(logger)

        _LOGGER_INSTANCES[name] = logger
        return logger


def _configure_handlers(logger: logging.Logger) -> None:
    """按当前全局配置重建处理器

    Args:
        logger: 日志记录器
    """
    level = getattr(logging, str(_DEFAULT_CONFIG["level"]).upper())
    logger.setLevel(level)

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    if _DEFAULT_CONFIG.get("console_output", True):
        logger.addHandler(_create_console_handler(level))

    if _DEFAULT_CONFIG.get("file_output", False):
        logger.addHandler(_create_file_handler(level))

    if not logger.handlers:
        logger.addHandler(logging.NullHandler())


def _create_console_handler(level: int) -> logging.Handler:
    """创建控制台处理器

    Args:
        level: 日志级别

    Returns:
        控制台日志处理器
    """
    # 彩色日志格式
    color_formatter = colorlog.ColoredFormatter(
        fmt="%(log_color)s" + _LINE_FORMAT,
        datefmt=_DATE_FORMAT,
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "red,bg_white",
        }
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(color_formatter)
    console_handler.setLevel(level)

    return console_handler


def _create_file_handler(level: int) -> logging.Handler:
    """创建文件处理器

    Args:
        level: 日志级别

    Returns:
        文件日志处理器
    """
    rotation_size = _parse_size(str(_DEFAULT_CONFIG.get("rotation", "20 MB")))

    file_formatter = logging.Formatter(fmt=_LINE_FORMAT, datefmt=_DATE_FORMAT)

    log_file = Path(_DEFAULT_CONFIG["file"])
    log_file.parent.mkdir(parents=True, exist_ok=True)

    file_handler = RotatingFileHandler(
        filename=str(log_file),
        maxBytes=rotation_size,
        backupCount=int(_DEFAULT_CONFIG.get("backup_count", 5)),
        encoding="utf-8"
    )
    file_handler.setFormatter(file_formatter)
    file_handler.setLevel(level)

    return file_handler


def _parse_size(size_str: str) -> int:
    """解析大小字符串

    Args:
        size_str: 大小字符串，如 "100 MB"

    Returns:
        字节数
    """
    size_str = size_str.strip().upper()

    if size_str.endswith("KB"):
        return int(float(size_str[:-2]) * 1024)
    elif size_str.endswith("MB"):
        return int(float(size_str[:-2]) * 1024 * 1024)
    elif size_str.endswith("GB"):
        return int(float(size_str[:-2]) * 1024 * 1024 * 1024)
    else:
        # 默认按字节处理
        return int(float(size_str))


class LoggerMixin:
    """日志混入类

    为其他类提供日志功能
    """

    @property
    def logger(self) -> logging.Logger:
        """获取当前类的日志记录器

        Returns:
            日志记录器
        """
        return get_logger(f"{self.__class__.__module__}.{self.__class__.__name__}")


def log_execution_time(func):
    """执行时间日志装饰器

    Args:
        func: 被装饰的函数

    Returns:
        装饰后的函数
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger(func.__module__)
        start_time = time.perf_counter()

        try:
            result = func(*args, **kwargs)
            execution_time = time.perf_counter() - start_time
            logger.info(f"函数 {func.__name__} 执行时间: {execution_time:.3f}秒")
            return result
        except Exception as e:
            execution_time = time.perf_counter() - start_time
            logger.error(f"函数 {func.__name__} 执行失败 (耗时: {execution_time:.3f}秒): {e}")
            raise

    return wrapper
