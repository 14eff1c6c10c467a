"""Logging configuration for the NOIR controller."""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

from ..core.config import LoggingConfig

LOG_ENV_VAR = "NOIR_MPC_LOG"

_ENV_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def resolve_level(config: LoggingConfig) -> int:
    """Pick the log level, letting NOIR_MPC_LOG override the configured one."""
    level = getattr(logging, config.level.upper(), logging.INFO)
    env_value = os.environ.get(LOG_ENV_VAR)
    if env_value:
        env_level = _ENV_LEVELS.get(env_value.strip().lower())
        if env_level is None:
            logging.getLogger(__name__).warning(
                f"Ignoring {LOG_ENV_VAR}={env_value!r}; expected one of {sorted(_ENV_LEVELS)}"
            )
        else:
            level = env_level
    return level


def configure_logging(config: LoggingConfig, log_file: Optional[str] = None) -> None:
    """Configure the logging system.

    Args:
        config: Logging configuration
        log_file: Optional log file path. If not provided, uses config.file
    """
    level = resolve_level(config)
    file_path = log_file or config.file

    if file_path:
        Path(file_path).parent.mkdir(exist_ok=True, parents=True)

    file_formatter = logging.Formatter(config.format)
    console_formatter = logging.Formatter('%(levelname)s - %(message)s')

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Remove existing handlers to avoid duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(console_formatter)
    console_handler.setLevel(level)
    root_logger.addHandler(console_handler)

    if file_path:
        file_handler = logging.FileHandler(file_path, encoding='utf-8')
        file_handler.setFormatter(file_formatter)
        file_handler.setLevel(level)
        root_logger.addHandler(file_handler)

    logging.getLogger('noir_mpc').setLevel(level)
