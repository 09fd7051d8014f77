"""Downlink schedulers: the DRA scheduler and the M-LWDF-PF benchmark."""

from core.config import SimConfig
from core.models import SchedulerKind

from .base import RadioParams, Scheduler
from .dra import DraScheduler
from .mlwdf import MlwdfConfig, MlwdfScheduler, mlwdf_weight, schedule_frame


def create_scheduler(config: SimConfig) -> Scheduler:
    """Scheduler instance for the configured kind"""
    if config.system.scheduler is SchedulerKind.MLWDF:
        return MlwdfScheduler(config)
    return DraScheduler(config)


__all__ = [
    'RadioParams',
    'Scheduler',
    'DraScheduler',
    'MlwdfConfig',
    'MlwdfScheduler',
    'mlwdf_weight',
    'schedule_frame',
    'create_scheduler',
]
