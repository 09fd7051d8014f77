"""
M-LWDF-PF benchmark scheduler for OFDMA.

Power is split equally over the subchannels and every subchannel goes, in
index order, to the backlogged user with the largest
a_i * D_HOL * r_i, a_i = -log10(delta_i) / (D_max_i * R_i). R_i is updated
inside the frame after every assignment so one user does not take all the
subchannels on a single good frame.
Subchannels left once every decodable queue is covered go to users in
outage at level 0 with no rate, so the frame always spends the full budgets.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict

from core.exceptions import ValidationError
from core.models import Allocation, FrameContext, SimUser, UserAllocation
from radio.phy_mcs import discrete_rate, quantize_sinr_down, shannon_rate
from schedulers.base import RadioParams, Scheduler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MlwdfConfig:
    n_subchannels: int
    per_subchannel_power: float

    def __post_init__(self):
        if self.n_subchannels < 1:
            raise ValidationError("n_subchannels", self.n_subchannels, "must be >= 1")
        if self.per_subchannel_power < 0:
            raise ValidationError("per_subchannel_power", self.per_subchannel_power, "must be >= 0")

    @classmethod
    def from_radio(cls, radio: RadioParams) -> "MlwdfConfig":
        return cls(radio.n_subchannels, radio.total_power / radio.n_subchannels)


def mlwdf_weight(user: SimUser, hol_delay: float, avg_rate: float, rate: float,
                 rate_floor: float = 1.0) -> float:
    """a_i * D_HOL * r_i; -inf for users with nothing to send"""
    if not user.queue.backlogged:
        return -math.inf
    a = user.profile.delay_weight / max(avg_rate, rate_floor)
    return a * hol_delay * rate


def schedule_frame(ctx: FrameContext, radio: RadioParams, mlwdf: MlwdfConfig,
                   rate_floor: float = 1.0) -> Allocation:
    """Greedy per-subchannel assignment with equal power per subchannel"""
    allocation = Allocation(frame=ctx.frame)
    backlogged = sorted((u for u in ctx.users if u.queue.backlogged), key=lambda u: u.user_id)
    if not backlogged:
        return allocation

    w_sub = radio.subchannel_bw
    p_sub = mlwdf.per_subchannel_power
    model = radio.rate_model

    # Below the lowest threshold a user still holds level 0 but decodes nothing.
    levels = {}
    decodable = set()
    for user in backlogged:
        sinr = p_sub * ctx.gains[user.user_id] / (radio.n0 * w_sub)
        levels[user.user_id] = quantize_sinr_down(sinr, radio.mcs_table) if sinr > 0 else radio.mcs_table[0]
        if sinr >= radio.mcs_table[0].sinr_threshold * (1.0 - 1e-12):
            decodable.add(user.user_id)

    shannon = {u.user_id: shannon_rate(p_sub, w_sub, ctx.gains[u.user_id], model) for u in backlogged}
    hol = {u.user_id: u.queue.hol_delay(ctx.now) for u in backlogged}
    scratch_rate = {u.user_id: u.queue.avg_rate for u in backlogged}
    frame_rate: Dict[int, float] = {u.user_id: 0.0 for u in backlogged}
    residual = {u.user_id: float(u.queue.q_bits) for u in backlogged}
    counts: Dict[int, int] = {u.user_id: 0 for u in backlogged}

    for _ in range(mlwdf.n_subchannels):
        pending = [u for u in backlogged if residual[u.user_id] > 0]
        pool = [u for u in pending if u.user_id in decodable] or pending or backlogged
        best = None
        best_score = -math.inf
        for user in pool:
            uid = user.user_id
            score = mlwdf_weight(user, hol[uid], scratch_rate[uid], shannon[uid], rate_floor)
            if best is None or score > best_score:
                best, best_score = user, score
        uid = best.user_id
        sub_rate = discrete_rate(levels[uid], w_sub) if uid in decodable else 0.0
        counts[uid] += 1
        frame_rate[uid] += sub_rate
        residual[uid] -= sub_rate * radio.frame_len
        alpha = best.queue.alpha
        scratch_rate[uid] = alpha * scratch_rate[uid] + (1.0 - alpha) * frame_rate[uid]

    for uid, k in counts.items():
        if k == 0:
            continue
        allocation.entries[uid] = UserAllocation(
            user_id=uid,
            power=k * p_sub,
            bandwidth=k * w_sub,
            n_subchannels=k,
            mcs=levels[uid],
            served_rate=frame_rate[uid],
        )
    allocation.selected = frozenset(allocation.entries)
    return allocation


class MlwdfScheduler(Scheduler):
    """Benchmark scheduler without power control"""

    def __init__(self, config):
        super().__init__(config)
        self.mlwdf = MlwdfConfig.from_radio(self.radio)

    def schedule(self, ctx: FrameContext) -> Allocation:
        return schedule_frame(ctx, self.radio, self.mlwdf, self.config.scheduling.rate_floor_bps)

    def get_scheduler_name(self) -> str:
        return "mlwdf"
