"""Traffic generation, user queues and the elastic video rate controller."""

from .queues import QueueState, serve, update_avg_rate, update_omega
from .sources import (
    BestEffortSource,
    TrafficSource,
    VideoSource,
    VoipSource,
    bounded_pareto_mean,
    bounded_pareto_sample,
)
from .rate_control import rate_controller_step

__all__ = [
    'QueueState',
    'serve',
    'update_avg_rate',
    'update_omega',
    'BestEffortSource',
    'TrafficSource',
    'VideoSource',
    'VoipSource',
    'bounded_pareto_mean',
    'bounded_pareto_sample',
    'rate_controller_step',
]
