"""
Logging configuration for the LiVE inference toolkit.
Console logging goes to stderr; JSON and rotating file logs are opt-in.
"""
import logging
import logging.handlers
import json
import sys
from typing import Dict
from config.settings import LOG_DIR, LOG_LEVEL, LOG_FORMAT, LOG_TO_FILE


class JsonFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging."""
    def format(self, record):
        log_obj = {
            'timestamp': self.formatTime(record),
            'name': record.name,
            'level': record.levelname,
            'message': record.getMessage(),
            'module': record.module,
            'line': record.lineno
        }
        if record.exc_info:
            log_obj['exception'] = self.formatException(record.exc_info)
        return json.dumps(log_obj)


def setup_logger(name: str, log_file: str, level: str = LOG_LEVEL, to_file: bool = LOG_TO_FILE) -> logging.Logger:
    """
    Sets up a logger with a stderr handler and, optionally, rotating file handlers.

    Args:
        name (str): Name of the logger
        log_file (str): File name used when file logging is enabled
        level (str): Logging level
        to_file (bool): Attach plain, JSON and error-only rotating file handlers

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(f'live.{name}')
    logger.setLevel(level)
    logger.propagate = False
    if logger.handlers:
        return logger

    standard_formatter = logging.Formatter(LOG_FORMAT)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(standard_formatter)
    logger.addHandler(stream_handler)

    if to_file:
        LOG_DIR.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            LOG_DIR / log_file,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5
        )
        file_handler.setFormatter(standard_formatter)

        json_handler = logging.handlers.RotatingFileHandler(
            LOG_DIR / f'{log_file}.json',
            maxBytes=10*1024*1024,
            backupCount=5
        )
        json_handler.setFormatter(JsonFormatter())

        error_handler = logging.handlers.RotatingFileHandler(
            LOG_DIR / f'error_{log_file}',
            maxBytes=10*1024*1024,
            backupCount=5
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(standard_formatter)

        logger.addHandler(file_handler)
        logger.addHandler(json_handler)
        logger.addHandler(error_handler)

    return logger


# Create loggers for different components
LOGGERS: Dict[str, logging.Logger] = {
    'system': setup_logger('system', 'system.log'),
    'numerics': setup_logger('numerics', 'numerics.log'),
    'estimation': setup_logger('estimation', 'estimation.log'),
    'projection': setup_logger('projection', 'projection.log'),
    'inference': setup_logger('inference', 'inference.log'),
    'simulation': setup_logger('simulation', 'simulation.log'),
    'cli': setup_logger('cli', 'cli.log'),
}


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger by name.

    Args:
        name (str): Name of the logger

    Returns:
        logging.Logger: The requested logger
    """
    return LOGGERS.get(name, LOGGERS['system'])


def set_level(level: str) -> None:
    """Change the level of every component logger (used by the CLI --verbose flag)."""
    for logger in LOGGERS.values():
        logger.setLevel(level.upper())
