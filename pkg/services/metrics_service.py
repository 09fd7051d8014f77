"""
Metrics accumulation for simulation runs.

Collects per-user packet delay samples and delivered bits during the
measurement window and reduces them to per-class, per-ring summary rows.
"""

import logging
import math
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence

from core.models import MetricsReport, SimUser, SummaryRow, TrafficClass

logger = logging.getLogger(__name__)

CLASS_ORDER = (TrafficClass.VOIP, TrafficClass.STREAMING, TrafficClass.BE)


def percentile(samples: Sequence[float], q: float = 0.95) -> Optional[float]:
    """Nearest-rank percentile; None for an empty sample set"""
    if not samples:
        return None
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q}")
    ordered = sorted(samples)
    rank = max(1, math.ceil(q * len(ordered) - 1e-9))
    return ordered[rank - 1]


def ring_label(ring_km: float) -> str:
    return f"{ring_km:g}"


class MetricsAccumulator:
    """Delay samples, violations and delivered bits of every user"""

    def __init__(self, users: Iterable[SimUser], frame_len: float, bad_ring_km: float):
        self.users = sorted(users, key=lambda u: u.user_id)
        self.frame_len = frame_len
        self.bad_ring_km = bad_ring_km
        self.delays: Dict[int, List[float]] = {u.user_id: [] for u in self.users}
        self.violations: Dict[int, int] = {u.user_id: 0 for u in self.users}
        self.bits: Dict[int, int] = {u.user_id: 0 for u in self.users}
        self.frames = 0

    def record(self, user: SimUser, delays: Sequence[float], served_bits: int):
        uid = user.user_id
        if delays:
            self.delays[uid].extend(delays)
            d_max = user.profile.d_max
            self.violations[uid] += sum(1 for d in delays if d > d_max + 1e-12)
        self.bits[uid] += served_bits

    def end_frame(self):
        self.frames += 1

    def censor(self, end_time: float, window_start: float):
        """Add (end - arrival) samples for packets still queued at the end of the run"""
        for user in self.users:
            pending = [end_time - p.arrival_time for p in user.queue.fifo
                       if p.arrival_time >= window_start]
            self.record(user, pending, 0)

    def throughput(self, user_id: int) -> float:
        if self.frames == 0:
            return 0.0
        return self.bits[user_id] / (self.frames * self.frame_len)

    def _row(self, traffic_class: TrafficClass, ring: str, members: List[SimUser]) -> SummaryRow:
        samples = [d for u in members for d in self.delays[u.user_id]]
        violations = sum(self.violations[u.user_id] for u in members)
        p95 = percentile(samples)
        return SummaryRow(
            traffic_class=traffic_class.value,
            ring=ring,
            n_users=len(members),
            n_samples=len(samples),
            delay_p95_ms=None if p95 is None else p95 * 1000.0,
            violation_rate=violations / len(samples) if samples else None,
            throughput_bps=math.fsum(self.throughput(u.user_id) for u in members) / len(members),
        )

    def rows(self) -> List[SummaryRow]:
        """Rows per class: every ring, then good/bad split, then all users"""
        rows: List[SummaryRow] = []
        if self.frames == 0:
            return rows
        by_class: Dict[TrafficClass, List[SimUser]] = defaultdict(list)
        for user in self.users:
            by_class[user.traffic_class].append(user)
        for traffic_class in CLASS_ORDER:
            members = by_class.get(traffic_class)
            if not members:
                continue
            for ring in sorted({u.ring_km for u in members}):
                rows.append(self._row(traffic_class, ring_label(ring),
                                      [u for u in members if u.ring_km == ring]))
            good = [u for u in members if u.ring_km < self.bad_ring_km - 1e-9]
            bad = [u for u in members if u.ring_km >= self.bad_ring_km - 1e-9]
            if good:
                rows.append(self._row(traffic_class, "good", good))
            if bad:
                rows.append(self._row(traffic_class, "bad", bad))
            rows.append(self._row(traffic_class, "all", members))
        return rows

    def logsum(self, elastic_classes: Iterable[TrafficClass]) -> float:
        """Sum of ln(mean throughput) over elastic users with positive throughput"""
        elastic = set(elastic_classes)
        values = [self.throughput(u.user_id) for u in self.users if u.traffic_class in elastic]
        return math.fsum(math.log(v) for v in values if v > 0)

    def report(self, scenario: str, scheduler: str, elastic_classes: Iterable[TrafficClass],
               solver_stats: Optional[Dict[str, int]] = None,
               mean_lambda: Optional[Dict[int, float]] = None) -> MetricsReport:
        data_throughput = math.fsum(
            self.throughput(u.user_id) for u in self.users if u.traffic_class is TrafficClass.BE
        )
        return MetricsReport(
            scenario=scenario,
            scheduler=scheduler,
            frames_measured=self.frames,
            rows=self.rows(),
            total_data_throughput=data_throughput,
            logsum=self.logsum(elastic_classes) if self.frames else 0.0,
            solver_stats=dict(solver_stats or {}),
            mean_lambda=dict(mean_lambda or {}),
        )
