import os
from dataclasses import dataclass
from functools import lru_cache

from .errors import TopoLidarError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    threads: int = 1
    log_level: str = "WARNING"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Reads process-level configuration from the environment.
    TOPO_LIDAR_THREADS caps worker threads handed to cKDTree queries.
    """
    raw = os.getenv("TOPO_LIDAR_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise TopoLidarError(f"TOPO_LIDAR_THREADS must be an integer, got {raw!r}")
    if threads < 1:
        raise TopoLidarError(f"TOPO_LIDAR_THREADS must be >= 1, got {threads}")
    level = os.getenv("TOPO_LIDAR_LOG_LEVEL", "WARNING").upper()
    if level not in LOG_LEVELS:
        raise TopoLidarError(f"TOPO_LIDAR_LOG_LEVEL must be one of {LOG_LEVELS}, got {level!r}")
    return Settings(threads=threads, log_level=level)
