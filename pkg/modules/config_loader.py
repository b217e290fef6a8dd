"""
Config Loader with Environment Variable Support
Load YAML configs and replace ${VAR} with values from .env

Dùng cho config/config.yaml: đường dẫn output, model path, seed... đều có thể
trỏ tới biến môi trường, ví dụ  out_dir: "${PCC_OUT_DIR}/bench".
"""
import os
import re
import logging
from pathlib import Path
from typing import Optional, Union

import yaml
from dotenv import load_dotenv

from modules.errors import ConfigurationError

logger = logging.getLogger(__name__)

REPO_ROOT = Path(__file__).parent.parent
DEFAULT_CONFIG_PATH = REPO_ROOT / 'config' / 'config.yaml'

# Load .env file
load_dotenv(REPO_ROOT / '.env')

_ENV_PATTERN = re.compile(r'\$\{([^}]+)\}')


def replace_env_vars(value):
    """
    Replace ${VAR_NAME} in string with environment variable value

    Examples:
        "${PCC_SEED}" -> "1234"
        "${PCC_OUT_DIR}/bench" -> "/data/runs/bench"
    """
    if not isinstance(value, str):
        return value

    def replacer(match):
        var_name = match.group(1)
        env_value = os.getenv(var_name)

        if env_value is None:
            logger.warning(f"Environment variable '{var_name}' not found, using empty string")
            return ""

        return env_value

    return _ENV_PATTERN.sub(replacer, value)


def replace_env_recursive(obj):
    """
    Recursively replace ${VAR} in all strings in nested dict/list
    """
    if isinstance(obj, dict):
        return {k: replace_env_recursive(v) for k, v in obj.items()}
    elif isinstance(obj, list):
        return [replace_env_recursive(item) for item in obj]
    elif isinstance(obj, str):
        return replace_env_vars(obj)
    else:
        return obj


def load_config_with_env(config_path: Optional[Union[str, Path]] = None) -> dict:
    """
    Load YAML config and replace all ${VAR} with environment variables

    Args:
        config_path: Path to YAML config file (mặc định config/config.yaml)

    Returns:
        dict: Config with environment variables replaced
    """
    path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    try:
        with open(path, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Cannot parse config {path}: {e}") from e

    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigurationError(f"Config {path} must be a mapping, got {type(config).__name__}")
    return replace_env_recursive(config)


# Export functions
__all__ = ['load_config_with_env', 'replace_env_vars', 'replace_env_recursive', 'DEFAULT_CONFIG_PATH']
