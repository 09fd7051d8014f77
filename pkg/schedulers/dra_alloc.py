"""
DRA per-frame allocation.

Selected non-elastic users get a basic allocation sized from their rate
requirement at the uniform-power SINR. Whatever power and bandwidth remain
is split among the elastic users by the proportional-fair solver, and the
continuous result is brought back onto the subchannel/MCS lattice by the
reshuffling pass.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from core.config import SimConfig
from core.models import (
    Allocation,
    FrameContext,
    McsLevel,
    PfProblem,
    RequiredRateMode,
    SelectionOutcome,
    SimUser,
    SolverStatus,
    TrafficClass,
    UserAllocation,
    VideoMode,
)
from optimization.pf_solver import feasibility_check, solve
from radio.phy_mcs import discrete_rate, next_level, power_for_level, quantize_sinr_down
from schedulers.base import RadioParams

logger = logging.getLogger(__name__)

_SUBCHANNEL_EPS = 1e-9


def required_rate(q: float, omega: float, r0: float, frame_len: float,
                  omega_floor: float = 0.01,
                  mode: RequiredRateMode = RequiredRateMode.MIN) -> float:
    """Rate a real-time user needs this frame: min (or max) of q / T and r0 / omega"""
    if q <= 0:
        return 0.0
    drain = q / frame_len
    compensated = r0 / max(omega, omega_floor)
    if mode is RequiredRateMode.MAX:
        return max(drain, compensated)
    return min(drain, compensated)


def _entry(user_id: int, k: int, level: McsLevel, gain: float, radio: RadioParams) -> UserAllocation:
    w = k * radio.subchannel_bw
    return UserAllocation(
        user_id=user_id,
        power=power_for_level(level, w, gain, radio.n0),
        bandwidth=w,
        n_subchannels=k,
        mcs=level,
        served_rate=discrete_rate(level, w),
    )


def _resize(entry: UserAllocation, k: int, radio: RadioParams):
    """Change the subchannel count at fixed MCS level (power scales with bandwidth)"""
    old_k = entry.n_subchannels
    entry.power = entry.power * k / old_k
    entry.n_subchannels = k
    entry.bandwidth = k * radio.subchannel_bw
    entry.served_rate = discrete_rate(entry.mcs, entry.bandwidth)


def basic_allocation(gain: float, r_min: float, radio: RadioParams,
                     user_id: int = -1) -> Optional[UserAllocation]:
    """
    Subchannels and power for a rate requirement at the uniform-power MCS level.

    Returns None when nothing is required.
    """
    if r_min <= 0:
        return None
    gamma0 = radio.nominal_sinr(gain)
    level = quantize_sinr_down(gamma0, radio.mcs_table) if gamma0 > 0 else radio.mcs_table[0]
    raw = r_min / level.efficiency / radio.subchannel_bw
    k = max(1, int(math.floor(raw + _SUBCHANNEL_EPS)))
    return _entry(user_id, k, level, gain, radio)


def _largest_power(entries: Mapping[int, UserAllocation]) -> int:
    return min(entries, key=lambda uid: (-entries[uid].power, uid))


def _over_budget(entries: Mapping[int, UserAllocation], power: float, bandwidth: float) -> bool:
    total_p = math.fsum(e.power for e in entries.values())
    total_w = math.fsum(e.bandwidth for e in entries.values())
    return total_p > power or total_w > bandwidth * (1.0 + 1e-12)


def _drop_one_subchannel(entries: Dict[int, UserAllocation], uid: int, radio: RadioParams):
    entry = entries[uid]
    if entry.n_subchannels <= 1:
        del entries[uid]
    else:
        _resize(entry, entry.n_subchannels - 1, radio)


def trim_overflow(entries: Dict[int, UserAllocation], power: float, bandwidth: float,
                  radio: RadioParams) -> Dict[int, UserAllocation]:
    """Take subchannels from the largest-power user until both budgets hold"""
    while entries and _over_budget(entries, power, bandwidth):
        _drop_one_subchannel(entries, _largest_power(entries), radio)
    return entries


@dataclass
class FrameUsers:
    """Selected users of a frame split by allocation path"""
    non_elastic: List[SimUser] = field(default_factory=list)
    elastic: List[SimUser] = field(default_factory=list)
    requirement: Dict[int, float] = field(default_factory=dict)


def _split_selected(selection: SelectionOutcome, users_by_id: Mapping[int, SimUser],
                    config: SimConfig) -> FrameUsers:
    elastic_video = config.system.video_mode is VideoMode.ELASTIC
    sc = config.scheduling
    split = FrameUsers()
    for uid in sorted(selection.chosen):
        user = users_by_id[uid]
        if user.traffic_class.is_realtime:
            split.requirement[uid] = required_rate(
                user.queue.q_bits, user.queue.omega, user.basic_rate,
                config.system.frame_len, sc.omega_floor, sc.required_rate_mode,
            )
        if user.traffic_class is TrafficClass.BE or (
            user.traffic_class is TrafficClass.STREAMING and elastic_video
        ):
            split.elastic.append(user)
        else:
            split.non_elastic.append(user)
    return split


def _add_basic(entries: Dict[int, UserAllocation], user: SimUser, r_min: float,
               gains: Mapping[int, float], radio: RadioParams):
    grant = basic_allocation(gains[user.user_id], r_min, radio, user.user_id)
    if grant is not None:
        entries[user.user_id] = grant


def _pf_problem(elastic: Sequence[SimUser], split: FrameUsers, gains: Mapping[int, float],
                radio: RadioParams, power: float, bandwidth: float) -> PfProblem:
    return PfProblem(
        phi=[u.profile.phi for u in elastic],
        noise=[radio.n0 / (radio.beta * gains[u.user_id]) for u in elastic],
        r_min=[split.requirement.get(u.user_id, 0.0) for u in elastic],
        power_budget=power,
        bandwidth_budget=bandwidth,
        user_ids=tuple(u.user_id for u in elastic),
    )


def allocate_frame(selection: SelectionOutcome, ctx: FrameContext, config: SimConfig,
                   radio: Optional[RadioParams] = None) -> Allocation:
    """
    Basic allocation, PF allocation and reshuffling for one frame.

    Args:
        selection: Users chosen by the selection stage
        ctx: Users, gains and time of the frame
        config: Scenario configuration
        radio: Radio parameters (derived from config when omitted)

    Returns:
        Discrete Allocation within the power and bandwidth budgets
    """
    radio = radio or RadioParams.from_config(config)
    users_by_id = {u.user_id: u for u in ctx.users}
    split = _split_selected(selection, users_by_id, config)

    basic: Dict[int, UserAllocation] = {}
    for user in split.non_elastic:
        _add_basic(basic, user, split.requirement.get(user.user_id, 0.0), ctx.gains, radio)
    trim_overflow(basic, radio.total_power, radio.bandwidth, radio)

    elastic = list(split.elastic)
    continuous: Dict[int, tuple] = {}
    status: Optional[SolverStatus] = None

    while elastic:
        power_left = radio.total_power - math.fsum(e.power for e in basic.values())
        bw_left = radio.bandwidth - math.fsum(e.bandwidth for e in basic.values())
        if power_left <= 0 or bw_left < radio.subchannel_bw * (1.0 - 1e-12):
            break
        problem = _pf_problem(elastic, split, ctx.gains, radio, power_left, bw_left)
        solution = solve(problem, config.solver)
        status = solution.status
        if solution.status is not SolverStatus.INFEASIBLE:
            for i, uid in enumerate(problem.user_ids):
                continuous[uid] = (float(solution.power[i]), float(solution.bandwidth[i]))
            break
        # Move the most power-hungry constrained user to the basic path.
        feasibility = feasibility_check(problem, config.solver)
        idx = int(np.argmax(np.where(problem.constrained, feasibility.user_power, -np.inf)))
        moved = elastic.pop(idx)
        logger.debug("Frame %d: PF infeasible, user %d moved to basic allocation",
                     ctx.frame, moved.user_id)
        _add_basic(basic, moved, split.requirement.get(moved.user_id, 0.0), ctx.gains, radio)
        trim_overflow(basic, radio.total_power, radio.bandwidth, radio)

    entries = reshuffle(basic, continuous, users_by_id, ctx.gains, radio)
    return Allocation(
        frame=ctx.frame,
        entries=entries,
        selected=selection.chosen,
        solver_status=status,
    )


def _quantize_continuous(uid: int, p: float, w: float, gain: float,
                         radio: RadioParams) -> UserAllocation:
    """Steps (a)-(b): subchannel count from w, MCS level from the continuous SINR"""
    k = max(1, int(math.floor(w / radio.subchannel_bw + _SUBCHANNEL_EPS)))
    sinr = p * gain / (radio.n0 * w) if p > 0 and w > 0 else 0.0
    level = quantize_sinr_down(sinr, radio.mcs_table) if sinr > 0 else radio.mcs_table[0]
    return _entry(uid, k, level, gain, radio)


def _has_buffer(entry: UserAllocation, user: SimUser, radio: RadioParams) -> bool:
    """Real-time users only grow while their queue outlasts the current grant"""
    if not user.traffic_class.is_realtime:
        return True
    return entry.served_rate * radio.frame_len < user.queue.q_bits


def reshuffle(basic: Mapping[int, UserAllocation], continuous: Mapping[int, tuple],
              users_by_id: Mapping[int, SimUser], gains: Mapping[int, float],
              radio: RadioParams) -> Dict[int, UserAllocation]:
    """
    Bring a mixed basic/continuous allocation onto the subchannel and MCS lattice.

    Quantizes elastic users, clamps streaming users to their queues, removes
    subchannels from the highest-power users while a budget is exceeded and
    finally hands out leftover bandwidth, real-time queues first, and power.
    """
    entries: Dict[int, UserAllocation] = {uid: e for uid, e in basic.items()}
    for uid in sorted(continuous):
        p, w = continuous[uid]
        entries[uid] = _quantize_continuous(uid, p, w, gains[uid], radio)

    # (c) streaming users never get much more than their queue can use
    sub_slack = radio.subchannel_bw * radio.frame_len
    for uid in sorted(entries):
        user = users_by_id[uid]
        if user.traffic_class is not TrafficClass.STREAMING:
            continue
        entry = entries[uid]
        while (entry.n_subchannels > 1 and entry.served_rate * radio.frame_len
               > user.queue.q_bits + entry.mcs.efficiency * sub_slack):
            _resize(entry, entry.n_subchannels - 1, radio)

    # (d) bandwidth, then (e) power
    while entries and math.fsum(e.bandwidth for e in entries.values()) > radio.bandwidth * (1.0 + 1e-12):
        _drop_one_subchannel(entries, _largest_power(entries), radio)
    while entries and math.fsum(e.power for e in entries.values()) > radio.total_power:
        _drop_one_subchannel(entries, _largest_power(entries), radio)

    # (f) leftover subchannels to backlogged real-time users, then to the best
    # channel that can afford them
    order = sorted(
        entries, key=lambda uid: (not users_by_id[uid].traffic_class.is_realtime, -gains[uid], uid),
    )
    while order:
        used_w = math.fsum(e.bandwidth for e in entries.values())
        if radio.bandwidth - used_w < radio.subchannel_bw * (1.0 - 1e-12):
            break
        power_left = radio.total_power - math.fsum(e.power for e in entries.values())
        target = None
        for uid in order:
            entry = entries[uid]
            extra = entry.power / entry.n_subchannels
            if extra <= power_left and _has_buffer(entry, users_by_id[uid], radio):
                target = uid
                break
        if target is None:
            break
        _resize(entries[target], entries[target].n_subchannels + 1, radio)

    # (g) leftover power boosts MCS levels, weakest channel first
    for uid in sorted(entries, key=lambda u: (gains[u], u)):
        entry = entries[uid]
        upper = next_level(entry.mcs, radio.mcs_table)
        if upper is None or not _has_buffer(entry, users_by_id[uid], radio):
            continue
        boosted = power_for_level(upper, entry.bandwidth, gains[uid], radio.n0)
        power_left = radio.total_power - math.fsum(e.power for e in entries.values())
        if boosted - entry.power <= power_left:
            entry.power = boosted
            entry.mcs = upper
            entry.served_rate = discrete_rate(upper, entry.bandwidth)

    return entries
