"""
Traffic sources.

Each source produces the packets released into one user's queue during a
frame. Arrivals are stamped with the frame start so head-of-line delays are
never negative at scheduling time.
"""

import math
from abc import ABC, abstractmethod
from typing import List

import numpy as np

from core.config import BestEffortConfig, VideoConfig, VoipConfig
from core.models import BestEffortMode, Packet
from traffic.queues import QueueState


class TrafficSource(ABC):
    """Abstract base class for per-user traffic generators"""

    @abstractmethod
    def generate(self, frame: int, now: float, queue: QueueState) -> List[Packet]:
        """
        Packets released during frame.

        Args:
            frame: Frame index
            now: Frame start time in seconds
            queue: The user's queue (full-buffer sources top it up)

        Returns:
            List of new Packets, in arrival order
        """
        pass

    @abstractmethod
    def mean_rate(self) -> float:
        """Long-run offered load in bps (inf for backlogged sources)"""
        pass


class VoipSource(TrafficSource):
    """Constant bit rate voice: one fixed-size packet per period"""

    def __init__(self, config: VoipConfig, frame_len: float, offset: int = 0):
        self.period_frames = max(1, round(config.period_s / frame_len))
        self.packet_bits = config.packet_bits
        self.offset = offset % self.period_frames
        self.frame_len = frame_len

    def generate(self, frame: int, now: float, queue: QueueState) -> List[Packet]:
        if (frame - self.offset) % self.period_frames == 0:
            return [Packet(now, self.packet_bits)]
        return []

    def mean_rate(self) -> float:
        return self.packet_bits / (self.period_frames * self.frame_len)


def bounded_pareto_mean(shape: float, low: float, high: float) -> float:
    """Mean of a Pareto(shape, low) distribution truncated at high"""
    tail = (low / high) ** shape
    return (low ** shape / (1.0 - tail)) * (shape / (shape - 1.0)) * (
        low ** (1.0 - shape) - high ** (1.0 - shape)
    )


def bounded_pareto_sample(rng: np.random.Generator, shape: float, low: float, high: float) -> float:
    """Inverse-CDF draw from a truncated Pareto distribution"""
    u = rng.random()
    return low / (1.0 - u * (1.0 - (low / high) ** shape)) ** (1.0 / shape)


class VideoSource(TrafficSource):
    """
    Streaming video: truncated-Pareto slice sizes and interarrival times.

    Slice sizes are scaled so the mean offered load at rate level 1 equals the
    profile's basic rate. Rate level lam multiplies every slice size and leaves
    the interarrival process untouched, so sequences under one seed only
    differ by that factor.
    """

    def __init__(self, config: VideoConfig, frame_len: float, rng: np.random.Generator):
        self.config = config
        self.frame_len = frame_len
        self.rng = rng
        self.lam = 1
        shape = config.pareto_shape
        self._size_lo = config.size_min_bytes * 8.0
        self._size_hi = config.size_max_bytes * 8.0
        mean_size = bounded_pareto_mean(shape, self._size_lo, self._size_hi)
        mean_iat = bounded_pareto_mean(shape, config.iat_min_s, config.iat_max_s)
        self.size_scale = config.profile.r0 * mean_iat / mean_size
        self.next_arrival = self._draw_iat()

    def _draw_iat(self) -> float:
        c = self.config
        return bounded_pareto_sample(self.rng, c.pareto_shape, c.iat_min_s, c.iat_max_s)

    def _draw_base_size(self) -> int:
        raw = bounded_pareto_sample(self.rng, self.config.pareto_shape, self._size_lo, self._size_hi)
        return max(1, int(round(raw * self.size_scale)))

    def generate(self, frame: int, now: float, queue: QueueState) -> List[Packet]:
        frame_end = now + self.frame_len
        packets = []
        while self.next_arrival < frame_end:
            packets.append(Packet(now, self._draw_base_size() * self.lam))
            self.next_arrival += self._draw_iat()
        return packets

    def mean_rate(self) -> float:
        return self.config.profile.r0 * self.lam


class BestEffortSource(TrafficSource):
    """
    Best-effort data.

    In full-buffer mode the queue is topped up every frame so it can never be
    drained within one frame. In file mode a new file arrives as soon as the
    previous one has been delivered.
    """

    def __init__(self, config: BestEffortConfig, frame_len: float, max_frame_bits: float):
        self.config = config
        self.frame_len = frame_len
        self.target_bits = int(math.ceil(max_frame_bits)) + config.packet_bits

    def generate(self, frame: int, now: float, queue: QueueState) -> List[Packet]:
        if self.config.mode is BestEffortMode.FILE:
            if queue.q_bits == 0:
                return [Packet(now, self.config.file_bytes * 8)]
            return []
        deficit = self.target_bits - queue.q_bits
        if deficit <= 0:
            return []
        count = -(-deficit // self.config.packet_bits)
        return [Packet(now, self.config.packet_bits) for _ in range(count)]

    def mean_rate(self) -> float:
        return math.inf
