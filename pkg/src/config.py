"""
Configuration for the minimum Kullback entropy estimator
"""

import logging
import os

import yaml

from src.errors import ConfigError

DEFAULTS_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'config', 'defaults.yaml')

NUMERIC_KEYS = {
    'tolerance': float,
    'cutoff': int,
    'max_iter': int,
    'restarts': int,
    'restart_seed': int,
    'trajectory_step': float,
}


def load_defaults(path=None):
    """
    Read numerical defaults from a YAML file

    Args:
        path (str, optional): file to read; the packaged defaults when None

    Returns:
        dict: values for every key in NUMERIC_KEYS present in the file
    """
    path = path or DEFAULTS_PATH
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}", path=str(path)) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {path} is not valid YAML: {e}", path=str(path)) from e

    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping", path=str(path))
    unknown = sorted(set(data) - set(NUMERIC_KEYS))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}", path=str(path), keys=unknown)

    values = {}
    for key, value in data.items():
        cast = NUMERIC_KEYS[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Config value {key}={value!r} is not a number", path=str(path), key=key)
        if cast is int and int(value) != value:
            raise ConfigError(f"Config value {key}={value!r} must be an integer", path=str(path), key=key)
        values[key] = cast(value)
    return values


class Config:
    """Configuration class for the estimator and its command-line front end"""

    def __init__(self, config_path=None, log_level=None, log_file=None, **overrides):
        """Initialize the configuration; keyword arguments override file values"""
        # Numerical settings
        values = load_defaults(config_path)
        for key, value in overrides.items():
            if key not in NUMERIC_KEYS:
                raise ConfigError(f"Unknown setting {key!r}", key=key)
            if value is not None:
                values[key] = NUMERIC_KEYS[key](value)

        self.tolerance = values.get('tolerance', 1e-9)
        self.cutoff = values.get('cutoff', 32)
        self.max_iter = values.get('max_iter', 200)
        self.restarts = values.get('restarts', 5)
        self.restart_seed = values.get('restart_seed', 0)
        self.trajectory_step = values.get('trajectory_step', 1e-3)
        self._validate()

        # Logging settings
        self.log_level = self._get_log_level(log_level)
        self.log_file = log_file or os.environ.get('QMKE_LOG_FILE')

    def _validate(self):
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance!r}", key='tolerance')
        if self.cutoff < 2:
            raise ConfigError(f"cutoff must be at least 2, got {self.cutoff!r}", key='cutoff')
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter!r}", key='max_iter')
        if self.restarts < 0:
            raise ConfigError(f"restarts must be non-negative, got {self.restarts!r}", key='restarts')
        if not self.trajectory_step > 0:
            raise ConfigError(f"trajectory_step must be positive, got {self.trajectory_step!r}",
                              key='trajectory_step')

    def _get_log_level(self, log_level=None):
        """Get the log level from environment variable or parameter"""
        if log_level:
            return log_level

        env_level = os.environ.get('QMKE_LOG_LEVEL', 'WARNING').upper()
        level_map = {
            'DEBUG': logging.DEBUG,
            'INFO': logging.INFO,
            'WARNING': logging.WARNING,
            'ERROR': logging.ERROR,
            'CRITICAL': logging.CRITICAL
        }
        return level_map.get(env_level, logging.WARNING)

    def as_dict(self):
        return {key: getattr(self, key) for key in NUMERIC_KEYS}
