import os
import platform
from pathlib import Path
from typing import Optional

import numpy as np
import psutil


class SystemUtils:
    """System utility functions for simulation runs"""

    @staticmethod
    def get_system_info() -> dict:
        """Get basic system information recorded in run manifests"""
        return {
            "platform": platform.system(),
            "platform_release": platform.release(),
            "architecture": platform.machine(),
            "python_version": platform.python_version(),
            "numpy_version": np.__version__,
            "cpu_physical": psutil.cpu_count(logical=False),
            "cpu_logical": psutil.cpu_count(logical=True),
            "memory_total_mb": psutil.virtual_memory().total // (1024 * 1024),
        }

    @staticmethod
    def default_worker_count(requested: Optional[int] = None) -> int:
        """Number of sweep workers: the requested count, else physical cores"""
        if requested:
            return max(1, int(requested))
        return max(1, psutil.cpu_count(logical=False) or os.cpu_count() or 1)

    @staticmethod
    def derive_seed(base: int, *keys: int) -> int:
        """Deterministic 32-bit seed derived from a base seed and integer keys"""
        seq = np.random.SeedSequence([int(base), *[int(k) for k in keys]])
        return int(seq.generate_state(1)[0])

    @staticmethod
    def ensure_directory(path) -> Path:
        """Create a directory (and parents) if needed and return it"""
        target = Path(path)
        target.mkdir(parents=True, exist_ok=True)
        return target
