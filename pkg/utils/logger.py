"""
Logger - Daily log file plus stderr diagnostics

Results go to stdout as JSON, so everything logged here ends up either in the
daily log file or on stderr.
"""

import logging
import sys
import time
from contextlib import contextmanager
from datetime import datetime

from utils import planlab_home

LOG_RETENTION_DAYS = 30


class Logger:
    """Wrapper around the 'planlab' logger; level methods are delegated to it"""

    def __init__(self, log_level=logging.DEBUG):
        self.log_dir = planlab_home() / 'logs'
        self.log_file = None

        self.logger = logging.getLogger('planlab')
        self.logger.setLevel(log_level)
        self.logger.propagate = False

        # A fresh Logger replaces the handlers of the previous one
        for handler in self.logger.handlers[:]:
            self.logger.removeHandler(handler)
            handler.close()

        try:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self.log_file = self.log_dir / f"planlab_{datetime.now().strftime('%Y%m%d')}.log"
            file_handler = logging.FileHandler(self.log_file, encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
            ))
            self.logger.addHandler(file_handler)
        except OSError:
            # read-only home: stderr only
            self.log_file = None

        self.console_handler = logging.StreamHandler(sys.stderr)
        self.console_handler.setLevel(logging.WARNING)
        self.console_handler.setFormatter(logging.Formatter('planlab: %(levelname)s: %(message)s'))
        self.logger.addHandler(self.console_handler)

        if self.log_file is not None:
            self._prune_logs()

    def __getattr__(self, name):
        # debug, info, warning, error, exception
        if name.startswith('_'):
            raise AttributeError(name)
        return getattr(self.logger, name)

    def _prune_logs(self):
        cutoff = time.time() - LOG_RETENTION_DAYS * 24 * 60 * 60
        for old in self.log_dir.glob('planlab_*.log'):
            try:
                if old != self.log_file and old.stat().st_mtime < cutoff:
                    old.unlink()
            except OSError as e:
                self.logger.warning(f"Could not remove old log {old.name}: {e}")

    def log_file_operation(self, operation, file_path, success=True, details=None):
        """One line per read or write of a planning, program or dataset file"""
        message = f"{operation} {file_path}: {'ok' if success else 'failed'}"
        if details:
            message += f" ({details})"
        self.logger.info(message)

    def log_performance(self, operation, duration, details=None):
        """Duration of a compile, gen or check run; details is text or a dict of counts"""
        if isinstance(details, dict):
            details = ', '.join(f"{key}={value}" for key, value in details.items())
        message = f"{operation} took {duration:.3f}s"
        if details:
            message += f" ({details})"
        self.logger.info(message)

    @contextmanager
    def timed(self, operation):
        """Log the duration of the block if it finishes; the yielded dict is added to the line"""
        details = {}
        started = time.perf_counter()
        yield details
        self.log_performance(operation, time.perf_counter() - started, details)

    def log_error_with_context(self, error, context=None, extra=None):
        message = f"{type(error).__name__}: {error}"
        if context:
            message = f"{context}: {message}"
        if extra:
            message += f" [{extra}]"
        self.logger.error(message)

    def get_log_file_path(self):
        return str(self.log_file) if self.log_file else None

    def set_console_log_level(self, level):
        """Accepts a level number or a name such as 'INFO'"""
        if isinstance(level, str):
            level = logging.getLevelName(level.upper())
        self.console_handler.setLevel(level)

    def enable_debug_mode(self):
        self.set_console_log_level(logging.DEBUG)
        self.logger.debug(f"Debug output enabled, log file {self.get_log_file_path()}")


_logger_instance = None


def get_logger():
    """Process-wide Logger"""
    global _logger_instance
    if _logger_instance is None:
        _logger_instance = Logger()
    return _logger_instance
