"""DRA scheduler: user selection followed by the joint power/bandwidth allocation."""

import logging

import numpy as np

from core.config import SimConfig
from core.models import Allocation, FrameContext
from schedulers.base import Scheduler
from schedulers.dra_alloc import allocate_frame
from schedulers.dra_select import select
from utils.system_utils import SystemUtils

logger = logging.getLogger(__name__)

SELECTION_STREAM = 2


class DraScheduler(Scheduler):
    """Selects users by satisfaction value, then allocates power and bandwidth jointly"""

    def __init__(self, config: SimConfig):
        super().__init__(config)
        self.rng = np.random.default_rng(SystemUtils.derive_seed(config.system.seed, SELECTION_STREAM))
        self.last_selection = None

    def schedule(self, ctx: FrameContext) -> Allocation:
        nominal = {u.user_id: self.radio.nominal_sinr(ctx.gains[u.user_id]) for u in ctx.users}
        selection = select(
            ctx.users, nominal, ctx.now, self.radio.beta, self.config.scheduling, self.rng
        )
        self.last_selection = selection
        return allocate_frame(selection, ctx, self.config, self.radio)

    def get_scheduler_name(self) -> str:
        return "dra"
