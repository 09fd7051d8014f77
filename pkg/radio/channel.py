"""
Per-user channel gain evolution.

Gain is the product of distance attenuation, log-normal shadowing and
Rayleigh fast fading. Both random factors are block-faded: they are redrawn
at the start of their coherence blocks and held constant in between. Each
user owns an independent numpy stream derived from (seed, class, index) so
changing one class's population leaves every other user's fading intact.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.config import SystemConfig
from core.exceptions import ValidationError

logger = logging.getLogger(__name__)

CHANNEL_STREAM = 0


@dataclass
class ChannelState:
    """Fading state of one user"""
    user_id: int
    distance: float          # meters
    pathloss_db: float
    shadow_db: float = 0.0
    fast_power: float = 1.0
    rng: np.random.Generator = field(default=None, repr=False, compare=False)


def pathloss_db(d: float, intercept_db: float = -31.5, slope_db: float = 35.0) -> float:
    """Distance attenuation in dB, d in meters (shadowing excluded)"""
    if not math.isfinite(d) or d < 1.0:
        raise ValidationError("d", d, "distance must be at least 1 m")
    return intercept_db - slope_db * math.log10(d)


def gain(state: ChannelState) -> float:
    """Linear channel gain h"""
    return 10.0 ** ((state.pathloss_db + state.shadow_db) / 10.0) * state.fast_power


class ChannelModel:
    """Creates and advances ChannelState objects for one scenario"""

    def __init__(self, system: SystemConfig):
        self.system = system
        self.fast_block = system.fast_block_frames
        self.slow_block = system.slow_block_frames

    def create(self, user_id: int, distance_m: float, seed: int, class_code: int, index: int) -> ChannelState:
        rng = np.random.default_rng(np.random.SeedSequence([seed, CHANNEL_STREAM, class_code, index]))
        return ChannelState(
            user_id=user_id,
            distance=distance_m,
            pathloss_db=pathloss_db(
                distance_m, self.system.pathloss_intercept_db, self.system.pathloss_slope_db
            ),
            rng=rng,
        )

    def advance(self, state: ChannelState, frame_index: int) -> ChannelState:
        """Redraw the factors whose coherence block starts at frame_index"""
        if frame_index % self.fast_block == 0:
            # Rayleigh amplitude -> exponential power with unit mean
            state.fast_power = max(float(state.rng.exponential(1.0)), self.system.fast_power_floor)
        if frame_index % self.slow_block == 0:
            state.shadow_db = float(state.rng.normal(0.0, self.system.shadow_std_db))
        return state
