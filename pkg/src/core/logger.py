#!/usr/bin/env python3
"""
Centralized lightweight logger for pdqrng.
Console output always; a rotating file under the run's output directory once
the pipeline knows where that is.
"""

import logging
import logging.handlers
import os
import sys
from typing import Optional

LOG_FILE_NAME = "pdqrng.log"

# Global logging control
_ENABLE_VERBOSE_LOGGING = False

_logger = logging.getLogger("pdqrng")
_logger.setLevel(logging.DEBUG)
_logger.propagate = False

_FORMATTER = logging.Formatter(
    '[%(asctime)s] [%(levelname)s] [%(name)s] (pid=%(process)d) %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)


def _setup_handlers() -> None:
    """Install the console handler (file logging is opt-in per run)."""
    # Clear existing handlers to avoid duplicates on re-init
    _logger.handlers = []
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(_FORMATTER)
    _logger.addHandler(console_handler)


# Initial setup
_setup_handlers()


def enable_file_logging(log_dir: str) -> Optional[str]:
    """Attach a rotating file handler (1MB cap, 5 backups) in log_dir."""
    try:
        os.makedirs(log_dir, exist_ok=True)
    except OSError as e:
        print(f"Failed to create log directory: {e}", file=sys.stderr)
        return None

    path = os.path.join(log_dir, LOG_FILE_NAME)
    for handler in list(_logger.handlers):
        if isinstance(handler, logging.handlers.RotatingFileHandler):
            _logger.removeHandler(handler)
            handler.close()
    try:
        file_handler = logging.handlers.RotatingFileHandler(
            path, maxBytes=1024 * 1024, backupCount=5
        )
        file_handler.setFormatter(_FORMATTER)
        _logger.addHandler(file_handler)
    except OSError as e:
        print(f"Failed to setup file logging: {e}", file=sys.stderr)
        return None
    return path


def _should_log(level: int) -> bool:
    if level >= logging.WARNING:
        return True
    return _ENABLE_VERBOSE_LOGGING


def log_debug(message: str, component: Optional[str] = None) -> None:
    if _should_log(logging.DEBUG):
        _logger.debug(f"[{component or 'core'}] {message}")


def log_info(message: str, component: Optional[str] = None) -> None:
    if _should_log(logging.INFO):
        _logger.info(f"[{component or 'core'}] {message}")


def log_warning(message: str, component: Optional[str] = None) -> None:
    if _should_log(logging.WARNING):
        _logger.warning(f"[{component or 'core'}] {message}")


def log_error(message: str, component: Optional[str] = None) -> None:
    # Always log errors
    _logger.error(f"[{component or 'core'}] {message}")


def enable_verbose_logging(enabled: bool = True) -> None:
    """Enable or disable debug/info output globally."""
    global _ENABLE_VERBOSE_LOGGING
    _ENABLE_VERBOSE_LOGGING = enabled

