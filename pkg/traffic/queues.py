"""
Per-user packet queues and filtered statistics.

A QueueState is a FIFO of Packets plus the EWMA statistics the schedulers
read: average received rate R (bps), transmission frequency omega and a
window of per-frame head-of-line delay snapshots.
"""

import math
from collections import deque
from typing import Iterable, List, Optional, Tuple

from core.models import Packet


class QueueState:
    """FIFO backlog and filtered statistics of one user"""

    def __init__(
        self,
        alpha: float,
        initial_rate: float,
        initial_omega: float = 1.0,
        hol_window: int = 400,
        full_buffer: bool = False,
        hol_cap: Optional[float] = None,
    ):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        self.fifo: deque = deque()
        self.q_bits: int = 0
        self.alpha = alpha
        self.avg_rate = float(initial_rate)
        self.omega = float(initial_omega)
        self.hol_history: deque = deque(maxlen=hol_window)
        self.full_buffer = full_buffer
        self.hol_cap = hol_cap
        self.last_service_time = 0.0
        self.last_served_bits = 0
        self.arrived_bits = 0
        self.served_bits = 0

    @property
    def backlogged(self) -> bool:
        return self.q_bits > 0

    def push(self, packets: Iterable[Packet]):
        for packet in packets:
            self.fifo.append(packet)
            self.q_bits += packet.remaining
            self.arrived_bits += packet.remaining

    def hol_delay(self, now: float) -> float:
        """
        Head-of-line delay at time now.

        Full-buffer queues have no meaningful head packet; their HOL delay is
        the time since the last positive service, capped at hol_cap.
        """
        if self.full_buffer:
            delay = max(0.0, now - self.last_service_time)
            return min(delay, self.hol_cap) if self.hol_cap is not None else delay
        if not self.fifo:
            return 0.0
        return max(0.0, now - self.fifo[0].arrival_time)

    def record_hol(self, now: float):
        self.hol_history.append(self.hol_delay(now))

    def mean_hol(self) -> float:
        if not self.hol_history:
            return 0.0
        return math.fsum(self.hol_history) / len(self.hol_history)


def serve(queue: QueueState, rate: float, frame_len: float, now: float) -> Tuple[List[Packet], List[float]]:
    """
    Drain floor(rate * frame_len) bits head-first.

    A packet departs when its last bit is served and contributes the delay
    sample now - arrival_time; partial service stays in Packet.remaining.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    budget = int(math.floor(rate * frame_len + 1e-9))
    departed: List[Packet] = []
    delays: List[float] = []
    served = 0
    while budget > 0 and queue.fifo:
        head = queue.fifo[0]
        take = min(budget, head.remaining)
        head.remaining -= take
        budget -= take
        served += take
        if head.remaining == 0:
            queue.fifo.popleft()
            departed.append(head)
            delays.append(now - head.arrival_time)
    queue.q_bits -= served
    queue.served_bits += served
    queue.last_served_bits = served
    if served > 0:
        queue.last_service_time = now
    return departed, delays


def update_avg_rate(queue: QueueState, served_rate: float) -> float:
    """R <- alpha * R + (1 - alpha) * served_rate"""
    queue.avg_rate = queue.alpha * queue.avg_rate + (1.0 - queue.alpha) * served_rate
    return queue.avg_rate


def update_omega(queue: QueueState, served: bool) -> float:
    """omega <- alpha * omega + (1 - alpha) * I(served)"""
    queue.omega = queue.alpha * queue.omega + (1.0 - queue.alpha) * (1.0 if served else 0.0)
    return queue.omega
