"""
Configuration and logging setup for guidec.
"""

import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class LogLevel(Enum):
    """Enumeration for logging levels."""
    DEBUG = logging.DEBUG
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR


@dataclass
class Config:
    """Global configuration for guidec."""
    log_level: LogLevel = LogLevel.INFO
    seed: Optional[int] = None
    threads: int = 1
    q_floor: float = 1e-9
    max_enumeration: int = 10 ** 7
    numerical_slack: float = 1e-12

    def __post_init__(self):
        """Validate settings and initialize logging."""
        if self.threads < 1:
            raise ValueError(f"threads must be positive, got {self.threads}")
        logging.basicConfig(
            level=self.log_level.value,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

    @classmethod
    def from_env(cls) -> "Config":
        """
        Build a configuration from GUIDEC_* environment variables.

        GUIDEC_THREADS caps parallelism, GUIDEC_LOG_LEVEL picks the log level and
        GUIDEC_SEED sets the base seed of scenario files that do not name one.
        """
        threads = os.environ.get("GUIDEC_THREADS", "1")
        seed = os.environ.get("GUIDEC_SEED")
        level = os.environ.get("GUIDEC_LOG_LEVEL", "INFO").upper()
        try:
            n_threads = max(1, int(threads))
        except ValueError:
            n_threads = 1
        log_level = LogLevel[level] if level in LogLevel.__members__ else LogLevel.INFO
        base_seed = int(seed) if seed is not None and seed.isdigit() else None
        return cls(log_level=log_level, seed=base_seed, threads=n_threads)


# Global configuration instance
config = Config.from_env()
logger = logging.getLogger("guidec")
