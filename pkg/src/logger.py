"""
Logging configuration for the minimum Kullback entropy estimator
"""
import logging
import sys
from pathlib import Path

CONSOLE_FORMAT = '%(message)s'
DEBUG_CONSOLE_FORMAT = '%(name)s: %(message)s'
FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _level_number(level):
    if isinstance(level, str):
        return logging.getLevelName(level.upper())
    return level


def setup_logger(name='src', log_file=None, level=logging.WARNING):
    """
    Set up a logger with console and optional file handler

    Library modules log through children of the 'src' logger, so configuring
    it once covers every module. The console handler writes to stderr because
    stdout carries the run report. At DEBUG level console lines are prefixed
    with the module that emitted them.

    Args:
        name (str, optional): Logger name
        log_file (str or Path, optional): Path to log file. If None, only logs to console
        level (int or str, optional): Logging level. Default is WARNING

    Returns:
        Logger: Configured logger instance
    """
    level = _level_number(level)
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Clear existing handlers to avoid duplicate messages
    if logger.hasHandlers():
        logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_format = DEBUG_CONSOLE_FORMAT if level <= logging.DEBUG else CONSOLE_FORMAT
    console_handler.setFormatter(logging.Formatter(console_format))
    logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        logger.addHandler(file_handler)

    return logger
