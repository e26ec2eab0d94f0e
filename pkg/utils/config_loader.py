"""
Configuration Loader - Run settings for generation, theory checks and compilation

Settings live in <home>/config.json; missing keys take the defaults below and
PLANLAB_SEED overrides the stored seed.
"""

import json
import os
from pathlib import Path

from utils import planlab_home
from utils.file_io import write_json
from utils.logger import get_logger

DEFAULT_CONFIG = {
    # Logging
    'log_level': 'WARNING',

    # Reproducibility and parallelism
    'seed': 0,
    'jobs': 1,

    # Plan lengths of the in-distribution and out-of-distribution buckets
    'id_min_length': 11,
    'id_max_length': 100,
    'ood_min_length': 101,
    'ood_max_length': 200,

    # Dataset generation
    'volume_scale': 100,
    'colors_retry_budget': 50,
    'grippers_max_shrink': 4,
    'generation_max_retries': 200,
    'df_mix': 0.5,
    'nonexecutable_share': 0.5,

    # Theory checks
    'flipflop_max_len': 14,
    'parity_exhaustive_max_cells': 9,
    'parity_exhaustive_max_len': 6,
    'parity_exhaustive_max_inits': 16,
    'parity_random_samples': 10000,
    'parity_random_max_len': 200,
    'compiled_trials': 2000,
    'lowering_max_len': 8,

    # C*-RASP evaluation and lowering
    'eval_batch_size': 256,
    'lowering_branch_budget': 20000,
}

POSITIVE_KEYS = ('jobs', 'volume_scale', 'eval_batch_size', 'lowering_branch_budget')
SHARE_KEYS = ('df_mix', 'nonexecutable_share')


class ConfigLoader:
    """Settings backed by a JSON file, typed after DEFAULT_CONFIG"""

    def __init__(self, config_file=None):
        self.config_dir = planlab_home()
        self.config_file = Path(config_file) if config_file else self.config_dir / 'config.json'
        self.logger = get_logger()
        self.default_config = dict(DEFAULT_CONFIG)
        self.config = self._load_config()

    def _read(self, path):
        """Known keys of a JSON settings file; unknown keys are dropped with a warning"""
        with open(path, 'r', encoding='utf-8') as f:
            stored = json.load(f)
        if not isinstance(stored, dict):
            raise ValueError(f"{path} does not hold a JSON object")
        unknown = sorted(set(stored) - set(self.default_config))
        if unknown:
            self.logger.warning(f"Ignoring unknown settings in {path}: {', '.join(unknown)}")
        return {key: value for key, value in stored.items() if key in self.default_config}

    def _load_config(self):
        config = dict(self.default_config)
        if self.config_file.exists():
            try:
                config.update(self._read(self.config_file))
            except (json.JSONDecodeError, ValueError, OSError) as e:
                self.logger.warning(f"Using default settings, could not read {self.config_file}: {e}")
                config = dict(self.default_config)

        seed = os.environ.get('PLANLAB_SEED')
        if seed:
            try:
                config['seed'] = int(seed)
            except ValueError:
                self.logger.warning(f"Ignoring non-integer PLANLAB_SEED={seed!r}")
        return config

    def save_config(self):
        try:
            write_json(self.config_file, self.config)
            return True
        except OSError as e:
            self.logger.log_error_with_context(e, "saving settings")
            return False

    def get(self, key, default=None):
        """Stored value, or the default when it is missing or of the wrong type"""
        value = self.config.get(key, default)
        expected = self.default_config.get(key)
        if expected is not None and not _same_kind(value, expected):
            return default if default is not None else expected
        if value is None and default is not None:
            return default
        return value

    def set(self, key, value):
        """Store one setting, converting command-line strings to the default's type"""
        if key not in self.default_config:
            raise KeyError(f"unknown configuration key: {key}")
        expected = self.default_config[key]
        if isinstance(value, str) and not isinstance(expected, str):
            value = type(expected)(value)
        self.config[key] = value
        return self.save_config()

    def get_all(self):
        return dict(self.config)

    def reset_to_defaults(self):
        self.config = dict(self.default_config)
        return self.save_config()

    def export_config(self, file_path):
        try:
            write_json(file_path, self.config)
            return True
        except OSError as e:
            self.logger.log_error_with_context(e, f"exporting settings to {file_path}")
            return False

    def import_config(self, file_path):
        """Merge settings from another file, repair them and save"""
        try:
            self.config.update(self._read(file_path))
        except (json.JSONDecodeError, ValueError, OSError) as e:
            self.logger.log_error_with_context(e, f"importing settings from {file_path}")
            return False
        self.validate_config()
        return self.save_config()

    def validate_config(self):
        """Replace wrongly typed or out-of-range values by their defaults; True if anything changed"""
        repaired = []

        for key, default_value in self.default_config.items():
            if key not in self.config or not _same_kind(self.config[key], default_value):
                self.config[key] = default_value
                repaired.append(key)

        for key in POSITIVE_KEYS:
            if self.config[key] < 1:
                self.config[key] = self.default_config[key]
                repaired.append(key)

        for key in SHARE_KEYS:
            if not 0.0 <= self.config[key] <= 1.0:
                self.config[key] = self.default_config[key]
                repaired.append(key)

        for low, high in (('id_min_length', 'id_max_length'), ('ood_min_length', 'ood_max_length')):
            if self.config[low] > self.config[high]:
                self.config[low] = self.default_config[low]
                self.config[high] = self.default_config[high]
                repaired += [low, high]

        if repaired:
            self.logger.debug(f"Repaired settings: {', '.join(repaired)}")
        return bool(repaired)


def _same_kind(value, expected):
    if isinstance(expected, bool):
        return isinstance(value, bool)
    if isinstance(expected, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(expected, int):
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, type(expected))


_config_instance = None


def get_config():
    """Process-wide ConfigLoader, validated on first use"""
    global _config_instance
    if _config_instance is None:
        _config_instance = ConfigLoader()
        _config_instance.validate_config()
    return _config_instance
