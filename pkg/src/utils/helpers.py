"""
辅助工具函数

配置文件加载、合并与点路径覆盖等通用功能
"""

import os
import re
import copy
import json
from typing import Any, Dict, List, Optional, Tuple, Union
from pathlib import Path

from .exceptions import ConfigValidationError
from .logger import get_logger


logger = get_logger(__name__)


def load_config(config_path: Optional[Union[str, Path]], default_config: Optional[Dict] = None) -> Dict[str, Any]:
    """加载配置文件

    Args:
        config_path: 配置文件路径，为 None 时只返回默认配置
        default_config: 默认配置

    Returns:
        配置字典

    Raises:
        ConfigValidationError: 文件不存在、格式不支持或JSON解析失败
    """
    config = copy.deepcopy(default_config or {})
    if config_path is None:
        return config

    config_file = Path(config_path)
    if not config_file.exists():
        logger.error(f"配置文件不存在: {config_file}")
        raise ConfigValidationError(f"配置文件不存在: {config_file}")

    if config_file.suffix.lower() != ".json":
        logger.error(f"不支持的配置文件格式: {config_file.suffix}")
        raise ConfigValidationError(f"不支持的配置文件格式: {config_file.suffix}")

    try:
        with open(config_file, "r", encoding="utf-8") as f:
            file_config = json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"加载配置文件失败 {config_file}: {e}")
        raise ConfigValidationError(f"配置文件格式错误 {config_file}: {e}") from e

    # 递归合并配置
    config = merge_dict(config, file_config or {})

    # 处理环境变量替换
    return replace_env_variables(config)


def merge_dict(base: Dict, update: Dict) -> Dict:
    """递归合并字典

    Args:
        base: 基础字典
        update: 更新字典

    Returns:
        合并后的字典
    """
    result = copy.deepcopy(base)

    for key, value in update.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_dict(result[key], value)
        else:
            result[key] = copy.deepcopy(value)

    return result


def replace_env_variables(config: Union[Dict, List, str, Any]) -> Union[Dict, List, str, Any]:
    """替换配置中的环境变量

    Args:
        config: 配置值

    Returns:
        替换后的配置值
    """
    if isinstance(config, dict):
        return {key: replace_env_variables(value) for key, value in config.items()}
    elif isinstance(config, list):
        return [replace_env_variables(item) for item in config]
    elif isinstance(config, str):
        # 替换 ${VAR_NAME} 格式的环境变量
        pattern = r"\$\{([^}]+)\}"

        def replace_var(match):
            var_name = match.group(1)
            return os.environ.get(var_name, match.group(0))

        return re.sub(pattern, replace_var, config)
    else:
        return config


def safe_get(data: Dict, key_path: str, default: Any = None) -> Any:
    """安全获取嵌套字典的值

    Args:
        data: 数据字典
        key_path: 键路径，如 "a.b.c"
        default: 默认值

    Returns:
        获取的值或默认值
    """
    keys = key_path.split(".")
    current = data

    try:
        for key in keys:
            current = current[key]
        return current
    except (KeyError, TypeError):
        return default


def set_by_path(data: Dict, key_path: str, value: Any) -> Dict:
    """按点路径设置嵌套字典的值，返回新字典

    Args:
        data: 数据字典
        key_path: 键路径，如 "horizon.n_steps"
        value: 新值

    Returns:
        设置后的字典副本
    """
    result = copy.deepcopy(data)
    keys = key_path.split(".")
    current = result

    for key in keys[:-1]:
        if not isinstance(current.get(key), dict):
            current[key] = {}
        current = current[key]

    current[keys[-1]] = value
    return result


def parse_override(expression: str) -> Tuple[str, Any]:
    """解析 "section.key=value" 形式的覆盖项

    值优先按JSON解析，失败时按字符串处理。

    Args:
        expression: 覆盖表达式

    Returns:
        (键路径, 值)

    Raises:
        ConfigValidationError: 表达式缺少等号或键为空
    """
    if "=" not in expression:
        raise ConfigValidationError(f"覆盖项缺少 '=': {expression}")

    key_path, raw_value = expression.split("=", 1)
    key_path = key_path.strip()
    if not key_path:
        raise ConfigValidationError(f"覆盖项键为空: {expression}")

    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value.strip()

    return key_path, value


def ensure_directory(path: Union[str, Path]) -> Path:
    """确保目录存在

    Args:
        path: 目录路径

    Returns:
        目录路径对象
    """
    dir_path = Path(path)
    dir_path.mkdir(parents=True, exist_ok=True)
    return dir_path
