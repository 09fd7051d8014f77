"""
Logging setup for the simulator.

Components log through module-level loggers; this module only configures the
root handler once so that console output keeps the "[component] message"
shape used throughout the project.
"""

import logging
import sys

LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"

_configured = False


def setup_logging(level: str = "INFO", stream=None) -> None:
    """Configure root logging once; later calls only change the level"""
    global _configured
    root = logging.getLogger()
    if not _configured:
        handler = logging.StreamHandler(stream or sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        _configured = True
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
