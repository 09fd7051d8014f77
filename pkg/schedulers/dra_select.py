"""
DRA user selection.

Real-time users (voice and video together) are ranked by their satisfaction
value and the top share F_R of the backlogged ones is scheduled, F_R being
the fraction of real-time queues above half their delay-bandwidth product.
Data users are ranked by instantaneous spectral efficiency over average rate
and a fixed share of them is scheduled.
"""

import logging
import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from core.config import SchedulingConfig
from core.models import SelectionOutcome, SelectionPolicy, SimUser, TrafficClass

logger = logging.getLogger(__name__)


def usv(user: SimUser, hol_delay: float, nominal_sinr: float, beta: float,
        rate_floor: float = 1.0) -> float:
    """
    User satisfaction value L * D_HOL * log2(1 + beta * gamma0) * r0 / R.

    Args:
        user: Real-time user (r0 is the rate-level scaled basic rate for elastic video)
        hol_delay: Head-of-line delay in seconds
        nominal_sinr: SINR under uniform power per Hz
        beta: SINR gap factor
        rate_floor: Lower bound applied to the average rate R

    Returns:
        Non-negative score
    """
    efficiency = math.log2(1.0 + beta * nominal_sinr)
    return user.profile.delay_weight * hol_delay * efficiency * user.basic_rate / max(
        user.queue.avg_rate, rate_floor
    )


def queue_threshold(user: SimUser, coeff: float = 0.5) -> float:
    """Queue size (bits) above which a real-time user counts as urgent"""
    return coeff * user.profile.d_max * user.basic_rate


def realtime_fraction(rt_users: Sequence[SimUser], coeff: float = 0.5) -> float:
    """Share of real-time users whose queue exceeds queue_threshold"""
    if not rt_users:
        return 0.0
    urgent = sum(1 for u in rt_users if u.queue.q_bits > queue_threshold(u, coeff))
    return urgent / len(rt_users)


def _ceil_share(fraction: float, count: int) -> int:
    return min(count, math.ceil(fraction * count - 1e-9))


def _top_k(scores: Mapping[int, float], k: int) -> List[int]:
    """Highest scores first, ties by user id"""
    return sorted(scores, key=lambda uid: (-scores[uid], uid))[:k]


def _weighted_draw(scores: Mapping[int, float], k: int, rng: np.random.Generator) -> List[int]:
    ids = sorted(scores)
    weights = np.array([max(scores[uid], 0.0) for uid in ids], dtype=float)
    # Zero-score users stay eligible with a tiny weight.
    weights += 1e-12 * (weights.max() if weights.max() > 0 else 1.0)
    picked = rng.choice(len(ids), size=k, replace=False, p=weights / weights.sum())
    return sorted((ids[i] for i in picked), key=lambda uid: (-scores[uid], uid))


def select(
    users: Iterable[SimUser],
    nominal_sinr: Mapping[int, float],
    now: float,
    beta: float,
    scheduling: SchedulingConfig = SchedulingConfig(),
    rng: Optional[np.random.Generator] = None,
) -> SelectionOutcome:
    """
    Choose the real-time and data users served this frame.

    Args:
        users: All users of the cell
        nominal_sinr: Uniform-allocation SINR per user id
        now: Frame start time in seconds
        beta: SINR gap factor
        scheduling: Fractions, thresholds and selection policy
        rng: Generator for the weighted_random policy

    Returns:
        SelectionOutcome with both chosen sets and the USV of every backlogged RT user
    """
    users = sorted(users, key=lambda u: u.user_id)
    rt_users = [u for u in users if u.traffic_class.is_realtime]
    data_users = [u for u in users if u.traffic_class is TrafficClass.BE]
    floor = scheduling.rate_floor_bps

    coeff = scheduling.queue_threshold_coeff
    f_r = realtime_fraction(rt_users, coeff)
    urgent = sum(1 for u in rt_users if u.queue.q_bits > queue_threshold(u, coeff))
    rt_backlogged = [u for u in rt_users if u.queue.backlogged]
    usv_values: Dict[int, float] = {
        u.user_id: usv(u, u.queue.hol_delay(now), nominal_sinr[u.user_id], beta, floor)
        for u in rt_backlogged
    }
    # ceil(F_R * n_backlogged) in integers
    n_rt = -(-urgent * len(rt_backlogged) // len(rt_users)) if rt_users else 0
    n_rt = min(n_rt, len(rt_backlogged))

    if scheduling.selection_policy is SelectionPolicy.WEIGHTED_RANDOM and n_rt > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        chosen_rt = _weighted_draw(usv_values, n_rt, rng)
    else:
        chosen_rt = _top_k(usv_values, n_rt)

    data_backlogged = [u for u in data_users if u.queue.backlogged]
    n_data = min(len(data_backlogged), _ceil_share(scheduling.data_fraction, len(data_users)))
    pf_metric = {
        u.user_id: math.log2(1.0 + beta * nominal_sinr[u.user_id]) / max(u.queue.avg_rate, floor)
        for u in data_backlogged
    }
    chosen_data = _top_k(pf_metric, n_data)

    return SelectionOutcome(
        chosen_rt=tuple(chosen_rt),
        chosen_data=tuple(chosen_data),
        f_r=f_r,
        usv_values=usv_values,
    )
