"""
Base scheduler.

Defines the interface every downlink scheduler implements and the radio
parameters they share.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

from core.config import SimConfig
from core.models import Allocation, FrameContext, McsLevel, RateModel


@dataclass(frozen=True)
class RadioParams:
    """Per-frame budgets and link constants of the cell"""
    total_power: float
    bandwidth: float
    n_subchannels: int
    n0: float
    beta: float
    frame_len: float
    mcs_table: Sequence[McsLevel]

    @property
    def subchannel_bw(self) -> float:
        return self.bandwidth / self.n_subchannels

    @property
    def rate_model(self) -> RateModel:
        return RateModel(beta=self.beta, n0=self.n0)

    def nominal_sinr(self, gain: float) -> float:
        """SINR under uniform power per Hz: P * h / (N0 * W)"""
        return self.total_power * gain / (self.n0 * self.bandwidth)

    @classmethod
    def from_config(cls, config: SimConfig) -> "RadioParams":
        s = config.system
        return cls(
            total_power=s.total_power_w,
            bandwidth=s.bandwidth_hz,
            n_subchannels=s.n_subchannels,
            n0=s.n0,
            beta=s.beta,
            frame_len=s.frame_len,
            mcs_table=s.mcs_table,
        )


class Scheduler(ABC):
    """
    Abstract base class for per-frame downlink schedulers.

    A scheduler sees the users, their queues and channel gains at the start
    of a frame and returns the discrete power/bandwidth allocation for it.
    """

    def __init__(self, config: SimConfig):
        self.config = config
        self.radio = RadioParams.from_config(config)

    @abstractmethod
    def schedule(self, ctx: FrameContext) -> Allocation:
        """
        Allocate one frame.

        Args:
            ctx: Users, gains and time of the frame

        Returns:
            Allocation whose totals stay within the power and bandwidth budgets
        """
        pass

    @abstractmethod
    def get_scheduler_name(self) -> str:
        """
        Get the scheduler identifier.

        Returns:
            Scheduler name (e.g., 'dra', 'mlwdf')
        """
        pass
