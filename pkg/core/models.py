from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, List, Dict, Any, Tuple, TYPE_CHECKING

import numpy as np
import yaml

from core.exceptions import ValidationError

if TYPE_CHECKING:
    from traffic.queues import QueueState


class TrafficClass(Enum):
    """Traffic classes served by the base station"""
    VOIP = "voip"
    STREAMING = "video"
    BE = "be"

    @property
    def is_realtime(self) -> bool:
        return self is not TrafficClass.BE


class SchedulerKind(Enum):
    """Available downlink schedulers"""
    DRA = "dra"
    MLWDF = "mlwdf"


class VideoMode(Enum):
    """How streaming users are treated by the allocator"""
    FIXED = "fixed"
    ELASTIC = "elastic"


class SolverStatus(Enum):
    """Outcome of a proportional-fair solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    DEGRADED = "degraded"


class SelectionPolicy(Enum):
    """How the real-time fraction picks individual users"""
    TOP_K = "top_k"
    WEIGHTED_RANDOM = "weighted_random"


class RequiredRateMode(Enum):
    """Operator joining the queue-drain and compensation terms of the rate requirement"""
    MIN = "min"
    MAX = "max"


class BestEffortMode(Enum):
    """Best-effort source behaviour"""
    FULL_BUFFER = "full_buffer"
    FILE = "file"


class SweepAxis(Enum):
    """User-count axes a sweep can vary"""
    VIDEO_USERS = "video_users"
    DATA_USERS = "data_users"


@dataclass(frozen=True)
class McsLevel:
    """One (modulation, coding, repetition) row of the link-adaptation table"""
    index: int
    sinr_threshold_db: float
    efficiency: float  # bps/Hz
    label: str = ""

    @property
    def sinr_threshold(self) -> float:
        """Linear SINR threshold"""
        return 10.0 ** (self.sinr_threshold_db / 10.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "threshold_db": self.sinr_threshold_db,
            "efficiency": self.efficiency,
            "label": self.label,
        }


@dataclass(frozen=True)
class RateModel:
    """Shannon rate approximation with an SINR gap factor"""
    beta: float = 0.25
    n0: float = 10.0 ** (-169.0 / 10.0) * 1e-3  # W/Hz

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ValidationError("beta", self.beta, "must be in (0, 1]")
        if not self.n0 > 0.0:
            raise ValidationError("n0", self.n0, "must be positive")


@dataclass(frozen=True)
class TrafficProfile:
    """QoS parameters of one traffic class"""
    traffic_class: TrafficClass
    r0: float            # basic rate, bps
    r_max: float         # maximum sustained rate, bps
    d_max: float         # delay bound, seconds
    delta: float         # allowed violation probability
    phi: float = 1.0     # proportional-fair weight
    alpha: float = 0.98  # EWMA filter constant

    @property
    def delay_weight(self) -> float:
        """L = -log10(delta) / d_max"""
        return -math.log10(self.delta) / self.d_max

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class": self.traffic_class.value,
            "r0": self.r0,
            "r_max": self.r_max,
            "d_max": self.d_max,
            "delta": self.delta,
            "phi": self.phi,
            "alpha": self.alpha,
        }


@dataclass(slots=True)
class Packet:
    """A unit of downlink traffic waiting in a user queue"""
    arrival_time: float
    size: int
    remaining: int = -1

    def __post_init__(self):
        if self.remaining < 0:
            self.remaining = self.size


@dataclass
class SimUser:
    """One mobile user: its traffic class, ring, QoS profile and queue"""
    user_id: int
    traffic_class: TrafficClass
    ring_km: float
    profile: TrafficProfile
    queue: "QueueState"
    elastic: bool = False
    lam: int = 1

    @property
    def basic_rate(self) -> float:
        """Basic rate r0, scaled by the video rate level for elastic streaming users"""
        if self.traffic_class is TrafficClass.STREAMING and self.elastic:
            return self.profile.r0 * self.lam
        return self.profile.r0

    @property
    def distance_m(self) -> float:
        return self.ring_km * 1000.0


@dataclass
class FrameContext:
    """Everything a scheduler sees at the start of a frame"""
    frame: int
    now: float
    users: List[SimUser]
    gains: Dict[int, float]


@dataclass
class UserAllocation:
    """Discrete resources granted to one user in one frame"""
    user_id: int
    power: float
    bandwidth: float
    n_subchannels: int
    mcs: Optional[McsLevel]
    served_rate: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "user_id": self.user_id,
            "power": self.power,
            "bandwidth": self.bandwidth,
            "n_subchannels": self.n_subchannels,
            "mcs_index": self.mcs.index if self.mcs else None,
            "served_rate": self.served_rate,
        }


@dataclass
class Allocation:
    """Per-frame allocation for all served users"""
    frame: int
    entries: Dict[int, UserAllocation] = field(default_factory=dict)
    selected: frozenset = frozenset()
    solver_status: Optional[SolverStatus] = None

    @property
    def total_power(self) -> float:
        return math.fsum(a.power for a in self.entries.values())

    @property
    def total_bandwidth(self) -> float:
        return math.fsum(a.bandwidth for a in self.entries.values())

    def served_rate(self, user_id: int) -> float:
        entry = self.entries.get(user_id)
        return entry.served_rate if entry else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame": self.frame,
            "entries": [a.to_dict() for a in self.entries.values()],
            "selected": sorted(self.selected),
            "solver_status": self.solver_status.value if self.solver_status else None,
        }


@dataclass
class SelectionOutcome:
    """Users chosen by the DRA selection stage"""
    chosen_rt: Tuple[int, ...]
    chosen_data: Tuple[int, ...]
    f_r: float
    usv_values: Dict[int, float] = field(default_factory=dict)

    @property
    def chosen(self) -> frozenset:
        return frozenset(self.chosen_rt) | frozenset(self.chosen_data)


@dataclass
class PfProblem:
    """
    Weighted proportional-fair power/bandwidth problem.

    noise[i] is the effective noise N0 / (beta * h_i) in W/Hz so that
    w * log2(1 + p / (noise * w)) equals the Shannon-gap rate.
    """
    phi: np.ndarray
    noise: np.ndarray
    r_min: np.ndarray
    power_budget: float
    bandwidth_budget: float
    user_ids: Tuple[int, ...] = ()

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.noise = np.asarray(self.noise, dtype=float)
        self.r_min = np.asarray(self.r_min, dtype=float)
        if not self.user_ids:
            self.user_ids = tuple(range(len(self.phi)))

    @property
    def size(self) -> int:
        return len(self.phi)

    @property
    def constrained(self) -> np.ndarray:
        return self.r_min > 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "power_budget": float(self.power_budget),
            "bandwidth_budget": float(self.bandwidth_budget),
            "users": [
                {"id": int(uid), "phi": float(f), "noise": float(n), "r_min": float(r)}
                for uid, f, n, r in zip(self.user_ids, self.phi, self.noise, self.r_min)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PfProblem":
        users = data.get("users", [])
        return cls(
            phi=[u["phi"] for u in users],
            noise=[u["noise"] for u in users],
            r_min=[u.get("r_min", 0.0) for u in users],
            power_budget=float(data["power_budget"]),
            bandwidth_budget=float(data["bandwidth_budget"]),
            user_ids=tuple(int(u.get("id", i)) for i, u in enumerate(users)),
        )

    def to_text(self) -> str:
        """Plain-text (YAML) form used for regression fixtures"""
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_text(cls, text: str) -> "PfProblem":
        return cls.from_dict(yaml.safe_load(text))


@dataclass
class PfSolution:
    """Continuous solution of a PfProblem"""
    power: np.ndarray
    bandwidth: np.ndarray
    rate: np.ndarray
    status: SolverStatus
    lambda_p: float = 0.0
    mu_w: float = 0.0
    nu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    def objective(self, phi: np.ndarray) -> float:
        """Sum of phi_i * ln(rate_i); -inf when any rate is zero"""
        with np.errstate(divide="ignore"):
            return float(np.sum(phi * np.log(self.rate)))


@dataclass
class SummaryRow:
    """One row of summary.csv"""
    traffic_class: str
    ring: str
    n_users: int
    n_samples: int
    delay_p95_ms: Optional[float]
    violation_rate: Optional[float]
    throughput_bps: float


@dataclass
class MetricsReport:
    """Aggregated metrics of one simulation run"""
    scenario: str
    scheduler: str
    frames_measured: int = 0
    rows: List[SummaryRow] = field(default_factory=list)
    total_data_throughput: float = 0.0
    logsum: float = 0.0
    solver_stats: Dict[str, int] = field(default_factory=dict)
    mean_lambda: Dict[int, float] = field(default_factory=dict)

    def row(self, traffic_class: str, ring: str = "all") -> Optional[SummaryRow]:
        for r in self.rows:
            if r.traffic_class == traffic_class and r.ring == ring:
                return r
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "scheduler": self.scheduler,
            "frames_measured": self.frames_measured,
            "total_data_throughput": self.total_data_throughput,
            "logsum": self.logsum,
            "solver_stats": dict(self.solver_stats),
            "rows": [vars(r).copy() for r in self.rows],
        }
