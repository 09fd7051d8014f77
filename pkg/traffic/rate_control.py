"""Threshold rate controller for elastic video."""

from core.models import TrafficProfile
from traffic.queues import QueueState


def rate_controller_step(
    profile: TrafficProfile,
    queue: QueueState,
    lam: int,
    lambda_max: int = 8,
    increase_below: float = 0.125,
    decrease_above: float = 0.25,
) -> int:
    """
    New video rate level from the mean HOL delay over the queue's window.

    Moves at most one level per call; callers invoke it once per update period.
    """
    mean_hol = queue.mean_hol()
    if mean_hol < increase_below * profile.d_max:
        return min(lam + 1, lambda_max)
    if mean_hol > decrease_above * profile.d_max:
        return max(lam - 1, 1)
    return lam
