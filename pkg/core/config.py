import copy
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from packaging.version import InvalidVersion, Version

from core.exceptions import ConfigurationError, ValidationError
from core.models import (
    BestEffortMode,
    McsLevel,
    RequiredRateMode,
    SchedulerKind,
    SelectionPolicy,
    SweepAxis,
    TrafficClass,
    TrafficProfile,
    VideoMode,
)

try:
    from xdg_base_dirs import xdg_config_home, xdg_data_home, xdg_cache_home
except ImportError:
    # Fallback to default paths if xdg-base-dirs is not available
    home = Path.home()

    def xdg_config_home():
        return Path(os.environ.get('XDG_CONFIG_HOME') or (home / '.config'))

    def xdg_data_home():
        return Path(os.environ.get('XDG_DATA_HOME') or (home / '.local' / 'share'))

    def xdg_cache_home():
        return Path(os.environ.get('XDG_CACHE_HOME') or (home / '.cache'))


logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

DEFAULT_MCS_TABLE = [
    {"threshold_db": -2.78, "efficiency": 1.0 / 6.0, "label": "QPSK 1/2 6x"},
    {"threshold_db": -1.0, "efficiency": 0.25, "label": "QPSK 1/2 4x"},
    {"threshold_db": 2.0, "efficiency": 0.5, "label": "QPSK 1/2 2x"},
    {"threshold_db": 5.0, "efficiency": 1.0, "label": "QPSK 1/2 1x"},
    {"threshold_db": 6.0, "efficiency": 1.5, "label": "QPSK 3/4 1x"},
    {"threshold_db": 10.5, "efficiency": 2.0, "label": "16QAM 1/2 1x"},
    {"threshold_db": 14.0, "efficiency": 3.0, "label": "16QAM 3/4 1x"},
    {"threshold_db": 18.0, "efficiency": 4.0, "label": "64QAM 2/3 1x"},
    {"threshold_db": 20.0, "efficiency": 4.5, "label": "64QAM 3/4 1x"},
]

DEFAULT_SCENARIO: Dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "name": "default",
    "system": {
        "seed": 1,
        "n_frames": 60000,
        "warmup_frames": 2000,
        "frame_len": 0.001,
        "total_power_w": 20.0,
        "bandwidth_hz": 10e6,
        "n_subchannels": 32,
        "noise_psd_dbm_hz": -169.0,
        "beta": 0.25,
        "cell_radius_km": 1.5,
        "distances_km": [0.3, 0.6, 0.9, 1.2, 1.5],
        "bad_ring_km": 1.5,
        "pathloss_intercept_db": -31.5,
        "pathloss_slope_db": 35.0,
        "shadow_std_db": 8.0,
        "fast_coherence_s": 0.005,
        "slow_coherence_s": 0.3,
        "fast_power_floor": 1e-9,
        "scheduler": "dra",
        "video_mode": "fixed",
        "censor_in_flight": True,
        "users": {"voip": 20, "video": 20, "be": 20},
        "mcs_table": DEFAULT_MCS_TABLE,
    },
    "traffic": {
        "voip": {
            "r0": 32000.0,
            "r_max": 32000.0,
            "d_max": 0.1,
            "delta": 0.05,
            "phi": 1.0,
            "alpha": 0.98,
            "period_s": 0.02,
            "packet_bits": 640,
        },
        "video": {
            "r0": 128000.0,
            "r_max": 1024000.0,
            "d_max": 0.4,
            "delta": 0.05,
            "phi": 1.0,
            "alpha": 0.995,
            "pareto_shape": 1.2,
            "size_min_bytes": 150,
            "size_max_bytes": 1875,
            "iat_min_s": 0.0025,
            "iat_max_s": 0.0125,
            "lambda_max": 8,
            "controller_period_frames": 200,
            "hol_window_frames": 400,
            "increase_below": 0.125,
            "decrease_above": 0.25,
        },
        "be": {
            "r0": 0.0,
            "r_max": None,
            "d_max": 2.0,
            "delta": 0.05,
            "phi": 1.0,
            "alpha": 0.998,
            "initial_rate": 100000.0,
            "mode": "full_buffer",
            "packet_bits": 12000,
            "file_bytes": 5000000,
        },
    },
    "scheduling": {
        "data_fraction": 0.2,
        "queue_threshold_coeff": 0.5,
        "selection_policy": "top_k",
        "required_rate_mode": "min",
        "omega_floor": 0.01,
        "rate_floor_bps": 1.0,
    },
    "solver": {
        "tolerance": 1e-6,
        "max_outer_iter": 200,
        "max_inner_iter": 100,
        "min_bandwidth_hz": 1.0,
        "max_degraded_fraction": 0.01,
    },
    "sweep": {
        "axis": "video_users",
        "values": [10, 20, 30, 40],
        "schedulers": ["dra", "mlwdf"],
    },
    "output": {
        "trace": False,
        "lambda_trace": True,
    },
    "advanced": {
        "log_level": "INFO",
        "max_workers": None,
    },
}


class ConfigManager:
    """XDG-compliant configuration management for the simulator"""

    def __init__(self):
        self.app_name = "ofdma-dra-sim"
        self.config_dir = Path(xdg_config_home()) / self.app_name
        self.data_dir = Path(xdg_data_home()) / self.app_name
        self.cache_dir = Path(xdg_cache_home()) / self.app_name
        self.config_file = self.config_dir / "scenario.yaml"
        self.default_config = copy.deepcopy(DEFAULT_SCENARIO)

    def load_config(self, path: Optional[Path] = None) -> dict:
        """Load a scenario file (YAML or JSON), merging it over the defaults"""
        source = Path(path) if path else self.config_file
        if not source.exists():
            if path:
                raise ConfigurationError(f"Scenario file not found: {source}", str(source))
            return copy.deepcopy(self.default_config)

        try:
            with open(source, 'r', encoding='utf-8') as f:
                if source.suffix.lower() == ".json":
                    user = json.load(f)
                else:
                    user = yaml.safe_load(f) or {}
        except (json.JSONDecodeError, yaml.YAMLError, IOError) as e:
            raise ConfigurationError(f"Error loading scenario {source}: {e}", str(source))

        if not isinstance(user, dict):
            raise ConfigurationError(f"Scenario {source} must be a mapping", str(source))
        self._check_schema_version(user.get("schema_version", SCHEMA_VERSION))
        logger.debug("Loaded scenario %s", source)
        return self._merge_configs(self.default_config, user)

    def save_config(self, config: dict, path: Optional[Path] = None):
        """Save a scenario as YAML"""
        target = Path(path) if path else self.config_file
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8') as f:
            yaml.safe_dump(config, f, sort_keys=False)

    def _check_schema_version(self, raw):
        try:
            found = Version(str(raw))
        except InvalidVersion:
            raise ConfigurationError(f"Invalid schema_version '{raw}'", "schema_version")
        if found.major != Version(SCHEMA_VERSION).major:
            raise ConfigurationError(
                f"Scenario schema {found} is incompatible with {SCHEMA_VERSION}", "schema_version"
            )

    def _merge_configs(self, default: dict, user: dict) -> dict:
        """Deep merge user config with defaults"""
        result = copy.deepcopy(default)
        for key, value in user.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_configs(result[key], value)
            else:
                result[key] = value
        return result

    def get_config_value(self, config: dict, key_path: str, default=None):
        """Get configuration value using dot notation (e.g., 'system.seed')"""
        value = config
        try:
            for key in key_path.split('.'):
                value = value[key]
            return value
        except (KeyError, TypeError):
            return default

    def set_config_value(self, config: dict, key_path: str, value):
        """Set configuration value using dot notation"""
        keys = key_path.split('.')
        current = config
        for key in keys[:-1]:
            current = current.setdefault(key, {})
        current[keys[-1]] = value

    def default_output_dir(self) -> Path:
        return self.data_dir / "runs"


# Global configuration instance
config_manager = ConfigManager()


def _require(condition: bool, field_name: str, value, reason: str):
    if not condition:
        raise ValidationError(field_name, value, reason)


def _enum(enum_cls, value, field_name: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ValidationError(field_name, value, f"expected one of {allowed}")


@dataclass(frozen=True)
class SystemConfig:
    """Cell, radio and run-length parameters"""
    seed: int = 1
    n_frames: int = 60000
    warmup_frames: int = 2000
    frame_len: float = 0.001
    total_power_w: float = 20.0
    bandwidth_hz: float = 10e6
    n_subchannels: int = 32
    noise_psd_dbm_hz: float = -169.0
    beta: float = 0.25
    cell_radius_km: float = 1.5
    distances_km: Tuple[float, ...] = (0.3, 0.6, 0.9, 1.2, 1.5)
    bad_ring_km: float = 1.5
    pathloss_intercept_db: float = -31.5
    pathloss_slope_db: float = 35.0
    shadow_std_db: float = 8.0
    fast_coherence_s: float = 0.005
    slow_coherence_s: float = 0.3
    fast_power_floor: float = 1e-9
    scheduler: SchedulerKind = SchedulerKind.DRA
    video_mode: VideoMode = VideoMode.FIXED
    censor_in_flight: bool = True
    users: Dict[str, int] = field(default_factory=lambda: {"voip": 20, "video": 20, "be": 20})
    mcs_table: Tuple[McsLevel, ...] = ()

    @property
    def n0(self) -> float:
        """Noise power spectral density in W/Hz"""
        return 10.0 ** (self.noise_psd_dbm_hz / 10.0) * 1e-3

    @property
    def subchannel_bw(self) -> float:
        return self.bandwidth_hz / self.n_subchannels

    @property
    def fast_block_frames(self) -> int:
        return max(1, round(self.fast_coherence_s / self.frame_len))

    @property
    def slow_block_frames(self) -> int:
        return max(1, round(self.slow_coherence_s / self.frame_len))

    def user_count(self, traffic_class: TrafficClass) -> int:
        return int(self.users.get(traffic_class.value, 0))


@dataclass(frozen=True)
class VoipConfig:
    profile: TrafficProfile
    period_s: float = 0.02
    packet_bits: int = 640


@dataclass(frozen=True)
class VideoConfig:
    profile: TrafficProfile
    pareto_shape: float = 1.2
    size_min_bytes: float = 150
    size_max_bytes: float = 1875
    iat_min_s: float = 0.0025
    iat_max_s: float = 0.0125
    lambda_max: int = 8
    controller_period_frames: int = 200
    hol_window_frames: int = 400
    increase_below: float = 0.125
    decrease_above: float = 0.25


@dataclass(frozen=True)
class BestEffortConfig:
    profile: TrafficProfile
    initial_rate: float = 100000.0
    mode: BestEffortMode = BestEffortMode.FULL_BUFFER
    packet_bits: int = 12000
    file_bytes: int = 5000000


@dataclass(frozen=True)
class SchedulingConfig:
    data_fraction: float = 0.2
    queue_threshold_coeff: float = 0.5
    selection_policy: SelectionPolicy = SelectionPolicy.TOP_K
    required_rate_mode: RequiredRateMode = RequiredRateMode.MIN
    omega_floor: float = 0.01
    rate_floor_bps: float = 1.0


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-6
    max_outer_iter: int = 200
    max_inner_iter: int = 100
    min_bandwidth_hz: float = 1.0
    max_degraded_fraction: float = 0.01


@dataclass(frozen=True)
class SweepConfig:
    axis: SweepAxis = SweepAxis.VIDEO_USERS
    values: Tuple[int, ...] = (10, 20, 30, 40)
    schedulers: Tuple[SchedulerKind, ...] = (SchedulerKind.DRA, SchedulerKind.MLWDF)


@dataclass(frozen=True)
class OutputConfig:
    trace: bool = False
    lambda_trace: bool = True


@dataclass(frozen=True)
class SimConfig:
    """Typed, validated scenario"""
    name: str
    system: SystemConfig
    voip: VoipConfig
    video: VideoConfig
    be: BestEffortConfig
    scheduling: SchedulingConfig
    solver: SolverConfig
    sweep: SweepConfig
    output: OutputConfig
    log_level: str = "INFO"
    max_workers: Optional[int] = None
    raw: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def profile(self, traffic_class: TrafficClass) -> TrafficProfile:
        return {
            TrafficClass.VOIP: self.voip.profile,
            TrafficClass.STREAMING: self.video.profile,
            TrafficClass.BE: self.be.profile,
        }[traffic_class]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimConfig":
        """Build and validate a SimConfig from a (merged) scenario dict"""
        merged = config_manager._merge_configs(DEFAULT_SCENARIO, data)
        s = merged["system"]

        table = _build_mcs_table(s.get("mcs_table") or DEFAULT_MCS_TABLE)
        users = {k: int(v) for k, v in (s.get("users") or {}).items()}
        for key in users:
            _enum(TrafficClass, key, f"system.users.{key}")

        system = SystemConfig(
            seed=int(s["seed"]),
            n_frames=int(s["n_frames"]),
            warmup_frames=int(s["warmup_frames"]),
            frame_len=float(s["frame_len"]),
            total_power_w=float(s["total_power_w"]),
            bandwidth_hz=float(s["bandwidth_hz"]),
            n_subchannels=int(s["n_subchannels"]),
            noise_psd_dbm_hz=float(s["noise_psd_dbm_hz"]),
            beta=float(s["beta"]),
            cell_radius_km=float(s["cell_radius_km"]),
            distances_km=tuple(float(d) for d in s["distances_km"]),
            bad_ring_km=float(s["bad_ring_km"]),
            pathloss_intercept_db=float(s["pathloss_intercept_db"]),
            pathloss_slope_db=float(s["pathloss_slope_db"]),
            shadow_std_db=float(s["shadow_std_db"]),
            fast_coherence_s=float(s["fast_coherence_s"]),
            slow_coherence_s=float(s["slow_coherence_s"]),
            fast_power_floor=float(s["fast_power_floor"]),
            scheduler=_enum(SchedulerKind, s["scheduler"], "system.scheduler"),
            video_mode=_enum(VideoMode, s["video_mode"], "system.video_mode"),
            censor_in_flight=bool(s["censor_in_flight"]),
            users=users,
            mcs_table=table,
        )

        t = merged["traffic"]
        voip = VoipConfig(
            profile=_build_profile(TrafficClass.VOIP, t["voip"]),
            period_s=float(t["voip"]["period_s"]),
            packet_bits=int(t["voip"]["packet_bits"]),
        )
        v = t["video"]
        video = VideoConfig(
            profile=_build_profile(TrafficClass.STREAMING, v),
            pareto_shape=float(v["pareto_shape"]),
            size_min_bytes=float(v["size_min_bytes"]),
            size_max_bytes=float(v["size_max_bytes"]),
            iat_min_s=float(v["iat_min_s"]),
            iat_max_s=float(v["iat_max_s"]),
            lambda_max=int(v["lambda_max"]),
            controller_period_frames=int(v["controller_period_frames"]),
            hol_window_frames=int(v["hol_window_frames"]),
            increase_below=float(v["increase_below"]),
            decrease_above=float(v["decrease_above"]),
        )
        b = t["be"]
        be = BestEffortConfig(
            profile=_build_profile(TrafficClass.BE, b),
            initial_rate=float(b["initial_rate"]),
            mode=_enum(BestEffortMode, b["mode"], "traffic.be.mode"),
            packet_bits=int(b["packet_bits"]),
            file_bytes=int(b["file_bytes"]),
        )

        sc = merged["scheduling"]
        scheduling = SchedulingConfig(
            data_fraction=float(sc["data_fraction"]),
            queue_threshold_coeff=float(sc["queue_threshold_coeff"]),
            selection_policy=_enum(SelectionPolicy, sc["selection_policy"], "scheduling.selection_policy"),
            required_rate_mode=_enum(RequiredRateMode, sc["required_rate_mode"], "scheduling.required_rate_mode"),
            omega_floor=float(sc["omega_floor"]),
            rate_floor_bps=float(sc["rate_floor_bps"]),
        )

        so = merged["solver"]
        solver = SolverConfig(
            tolerance=float(so["tolerance"]),
            max_outer_iter=int(so["max_outer_iter"]),
            max_inner_iter=int(so["max_inner_iter"]),
            min_bandwidth_hz=float(so["min_bandwidth_hz"]),
            max_degraded_fraction=float(so["max_degraded_fraction"]),
        )

        sw = merged["sweep"]
        sweep = SweepConfig(
            axis=_enum(SweepAxis, sw["axis"], "sweep.axis"),
            values=tuple(int(x) for x in sw["values"]),
            schedulers=tuple(_enum(SchedulerKind, k, "sweep.schedulers") for k in sw["schedulers"]),
        )

        out = merged["output"]
        output = OutputConfig(trace=bool(out["trace"]), lambda_trace=bool(out["lambda_trace"]))

        adv = merged["advanced"]
        max_workers = adv.get("max_workers")

        config = cls(
            name=str(merged.get("name", "default")),
            system=system,
            voip=voip,
            video=video,
            be=be,
            scheduling=scheduling,
            solver=solver,
            sweep=sweep,
            output=output,
            log_level=str(adv.get("log_level", "INFO")).upper(),
            max_workers=int(max_workers) if max_workers else None,
            raw=merged,
        )
        config.validate()
        return config

    @classmethod
    def default(cls) -> "SimConfig":
        return cls.from_dict({})

    def to_dict(self) -> Dict[str, Any]:
        """Nested dict equivalent of this config (including overrides applied with with_overrides)"""
        return copy.deepcopy(self.raw)

    def with_overrides(self, **dotted: Any) -> "SimConfig":
        """Return a new validated config with dot-path overrides, e.g. system__seed=3"""
        data = copy.deepcopy(self.raw)
        for key, value in dotted.items():
            config_manager.set_config_value(data, key.replace("__", "."), value)
        return SimConfig.from_dict(data)

    def validate(self):
        """Check every invariant the frame loop relies on"""
        s = self.system
        _require(s.n_frames >= 0, "system.n_frames", s.n_frames, "must be >= 0")
        _require(s.warmup_frames >= 0, "system.warmup_frames", s.warmup_frames, "must be >= 0")
        _require(s.frame_len > 0, "system.frame_len", s.frame_len, "must be positive")
        _require(s.total_power_w > 0, "system.total_power_w", s.total_power_w, "must be positive")
        _require(s.bandwidth_hz > 0, "system.bandwidth_hz", s.bandwidth_hz, "must be positive")
        _require(s.n_subchannels >= 1, "system.n_subchannels", s.n_subchannels, "must be >= 1")
        _require(0 < s.beta <= 1, "system.beta", s.beta, "must be in (0, 1]")
        _require(len(s.distances_km) >= 1, "system.distances_km", s.distances_km, "needs at least one ring")
        for d in s.distances_km:
            _require(0.001 <= d <= s.cell_radius_km, "system.distances_km", d,
                     "rings must lie between 1 m and the cell radius")
        _require(s.shadow_std_db >= 0, "system.shadow_std_db", s.shadow_std_db, "must be >= 0")
        _require(s.fast_power_floor > 0, "system.fast_power_floor", s.fast_power_floor, "must be positive")
        n_rings = len(s.distances_km)
        for key, count in s.users.items():
            _require(count >= 0, f"system.users.{key}", count, "must be >= 0")
            _require(count % n_rings == 0, f"system.users.{key}", count,
                     f"must be divisible across the {n_rings} distance rings")

        thresholds = [m.sinr_threshold_db for m in s.mcs_table]
        efficiencies = [m.efficiency for m in s.mcs_table]
        _require(all(a < b for a, b in zip(thresholds, thresholds[1:])),
                 "system.mcs_table", thresholds, "thresholds must be strictly increasing")
        _require(all(a < b for a, b in zip(efficiencies, efficiencies[1:])) and efficiencies[0] > 0,
                 "system.mcs_table", efficiencies, "efficiencies must be positive and strictly increasing")

        for profile in (self.voip.profile, self.video.profile, self.be.profile):
            name = f"traffic.{profile.traffic_class.value}"
            _require(0 < profile.alpha < 1, f"{name}.alpha", profile.alpha, "must be in (0, 1)")
            _require(0 < profile.delta < 1, f"{name}.delta", profile.delta, "must be in (0, 1)")
            _require(profile.d_max > 0, f"{name}.d_max", profile.d_max, "must be positive")
            _require(profile.phi > 0, f"{name}.phi", profile.phi, "must be positive")
            _require(profile.r0 >= 0, f"{name}.r0", profile.r0, "must be >= 0")

        _require(self.voip.period_s >= s.frame_len, "traffic.voip.period_s", self.voip.period_s,
                 "must be at least one frame")
        _require(self.voip.packet_bits > 0, "traffic.voip.packet_bits", self.voip.packet_bits, "must be positive")
        v = self.video
        _require(v.pareto_shape > 0 and v.pareto_shape != 1.0, "traffic.video.pareto_shape",
                 v.pareto_shape, "must be positive and different from 1")
        _require(0 < v.size_min_bytes < v.size_max_bytes, "traffic.video.size_max_bytes",
                 v.size_max_bytes, "must exceed size_min_bytes > 0")
        _require(0 < v.iat_min_s < v.iat_max_s, "traffic.video.iat_max_s", v.iat_max_s,
                 "must exceed iat_min_s > 0")
        _require(v.lambda_max >= 1, "traffic.video.lambda_max", v.lambda_max, "must be >= 1")
        _require(v.controller_period_frames >= 1, "traffic.video.controller_period_frames",
                 v.controller_period_frames, "must be >= 1")
        _require(0 <= v.increase_below < v.decrease_above, "traffic.video.decrease_above",
                 v.decrease_above, "must exceed increase_below")
        _require(self.be.packet_bits > 0, "traffic.be.packet_bits", self.be.packet_bits, "must be positive")

        sc = self.scheduling
        _require(0 < sc.data_fraction <= 1, "scheduling.data_fraction", sc.data_fraction, "must be in (0, 1]")
        _require(sc.queue_threshold_coeff >= 0, "scheduling.queue_threshold_coeff",
                 sc.queue_threshold_coeff, "must be >= 0")
        _require(0 < sc.omega_floor <= 1, "scheduling.omega_floor", sc.omega_floor, "must be in (0, 1]")
        _require(sc.rate_floor_bps > 0, "scheduling.rate_floor_bps", sc.rate_floor_bps, "must be positive")

        so = self.solver
        _require(so.tolerance > 0, "solver.tolerance", so.tolerance, "must be positive")
        _require(so.max_outer_iter >= 1 and so.max_inner_iter >= 1, "solver.max_outer_iter",
                 so.max_outer_iter, "iteration caps must be >= 1")
        _require(self.sweep.values != (), "sweep.values", self.sweep.values, "must be nonempty")
        _require(isinstance(logging.getLevelName(self.log_level), int), "advanced.log_level",
                 self.log_level, "unknown logging level")


def _build_profile(traffic_class: TrafficClass, section: Dict[str, Any]) -> TrafficProfile:
    r_max = section.get("r_max")
    return TrafficProfile(
        traffic_class=traffic_class,
        r0=float(section["r0"]),
        r_max=math.inf if r_max is None else float(r_max),
        d_max=float(section["d_max"]),
        delta=float(section["delta"]),
        phi=float(section.get("phi", 1.0)),
        alpha=float(section["alpha"]),
    )


def _build_mcs_table(rows: List[Dict[str, Any]]) -> Tuple[McsLevel, ...]:
    if not rows:
        raise ValidationError("system.mcs_table", rows, "needs at least one level")
    try:
        return tuple(
            McsLevel(
                index=i,
                sinr_threshold_db=float(row["threshold_db"]),
                efficiency=float(row["efficiency"]),
                label=str(row.get("label", "")),
            )
            for i, row in enumerate(rows)
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Malformed MCS table row: {e}", "system.mcs_table")


def load_sim_config(path: Optional[Path] = None) -> SimConfig:
    """Load a scenario file (or the defaults) into a validated SimConfig"""
    return SimConfig.from_dict(config_manager.load_config(path))
