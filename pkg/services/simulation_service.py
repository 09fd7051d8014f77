"""
Frame-loop simulation engine.

One run advances every user's channel, releases new traffic, asks the
configured scheduler for an allocation, checks it against the cell budgets,
drains the queues at the granted discrete rates and updates the filtered
statistics the schedulers read.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from core.config import SimConfig
from core.exceptions import ConservationError
from core.models import (
    Allocation,
    BestEffortMode,
    FrameContext,
    MetricsReport,
    SimUser,
    TrafficClass,
    VideoMode,
)
from radio.channel import ChannelModel, ChannelState, gain
from schedulers import create_scheduler
from schedulers.base import RadioParams, Scheduler
from services.metrics_service import MetricsAccumulator
from traffic.queues import QueueState, serve, update_avg_rate, update_omega
from traffic.rate_control import rate_controller_step
from traffic.sources import BestEffortSource, TrafficSource, VideoSource, VoipSource

logger = logging.getLogger(__name__)

TRAFFIC_STREAM = 1
CLASS_CODES = {TrafficClass.VOIP: 0, TrafficClass.STREAMING: 1, TrafficClass.BE: 2}
_BUDGET_RTOL = 1e-9
PROGRESS_EVERY = 1000


@dataclass
class UserRuntime:
    """Simulation-side state attached to one user"""
    user: SimUser
    channel: ChannelState
    source: TrafficSource


@dataclass
class RunArtifacts:
    """Optional per-frame records collected during a run"""
    trace_rows: List[dict] = field(default_factory=list)
    lambda_rows: List[dict] = field(default_factory=list)


class SimulationService:
    """Runs one scenario with one scheduler"""

    def __init__(self, config: SimConfig, scheduler: Optional[Scheduler] = None,
                 progress_callback: Optional[Callable[[int, int, str], None]] = None):
        self.config = config
        self.radio = RadioParams.from_config(config)
        self.scheduler = scheduler or create_scheduler(config)
        self.progress_callback = progress_callback
        self.channel_model = ChannelModel(config.system)
        self.runtimes: List[UserRuntime] = self._build_users()
        self.users: List[SimUser] = [rt.user for rt in self.runtimes]
        self.artifacts = RunArtifacts()
        self.solver_stats: Counter = Counter()

    # ------------------------------------------------------------------ setup

    def _queue_for(self, traffic_class: TrafficClass) -> QueueState:
        c = self.config
        profile = c.profile(traffic_class)
        full_buffer = traffic_class is TrafficClass.BE and c.be.mode is BestEffortMode.FULL_BUFFER
        initial_rate = c.be.initial_rate if traffic_class is TrafficClass.BE else profile.r0
        return QueueState(
            alpha=profile.alpha,
            initial_rate=initial_rate,
            hol_window=c.video.hol_window_frames,
            full_buffer=full_buffer,
            hol_cap=profile.d_max if full_buffer else None,
        )

    def _source_for(self, traffic_class: TrafficClass, index: int) -> TrafficSource:
        c = self.config
        frame_len = c.system.frame_len
        if traffic_class is TrafficClass.VOIP:
            return VoipSource(c.voip, frame_len, offset=index)
        if traffic_class is TrafficClass.STREAMING:
            rng = np.random.default_rng(np.random.SeedSequence(
                [c.system.seed, TRAFFIC_STREAM, CLASS_CODES[traffic_class], index]
            ))
            return VideoSource(c.video, frame_len, rng)
        top_efficiency = c.system.mcs_table[-1].efficiency
        max_frame_bits = top_efficiency * c.system.bandwidth_hz * frame_len
        return BestEffortSource(c.be, frame_len, max_frame_bits)

    def _build_users(self) -> List[UserRuntime]:
        """Users of each class are spread round-robin over the distance rings"""
        system = self.config.system
        elastic_video = system.video_mode is VideoMode.ELASTIC
        runtimes = []
        user_id = 0
        for traffic_class in (TrafficClass.VOIP, TrafficClass.STREAMING, TrafficClass.BE):
            for index in range(system.user_count(traffic_class)):
                ring = system.distances_km[index % len(system.distances_km)]
                user = SimUser(
                    user_id=user_id,
                    traffic_class=traffic_class,
                    ring_km=ring,
                    profile=self.config.profile(traffic_class),
                    queue=self._queue_for(traffic_class),
                    elastic=elastic_video and traffic_class is TrafficClass.STREAMING,
                )
                channel = self.channel_model.create(
                    user_id, user.distance_m, system.seed, CLASS_CODES[traffic_class], index
                )
                runtimes.append(UserRuntime(user, channel, self._source_for(traffic_class, index)))
                user_id += 1
        return runtimes

    # ------------------------------------------------------------------ checks

    def _check_allocation(self, frame: int, allocation: Allocation, gains: Dict[int, float]):
        """Budgets, subchannel lattice and MCS thresholds of one frame (entries in outage carry no rate)"""
        radio = self.radio
        total_p = allocation.total_power
        if total_p > radio.total_power * (1.0 + _BUDGET_RTOL):
            raise ConservationError(frame, "power", total_p, radio.total_power)
        total_w = allocation.total_bandwidth
        if total_w > radio.bandwidth * (1.0 + _BUDGET_RTOL):
            raise ConservationError(frame, "bandwidth", total_w, radio.bandwidth)
        for entry in allocation.entries.values():
            expected_w = entry.n_subchannels * radio.subchannel_bw
            if entry.n_subchannels < 1 or not math.isclose(entry.bandwidth, expected_w, rel_tol=1e-12):
                raise ConservationError(frame, f"bandwidth of user {entry.user_id}",
                                        entry.bandwidth, expected_w)
            if entry.served_rate == 0.0:
                continue
            sinr = entry.power * gains[entry.user_id] / (radio.n0 * entry.bandwidth)
            threshold = entry.mcs.sinr_threshold
            if sinr < threshold * (1.0 - _BUDGET_RTOL):
                raise ConservationError(frame, f"SINR of user {entry.user_id}", sinr, threshold)

    # ------------------------------------------------------------------ loop

    def _trace(self, frame: int, allocation: Allocation, now: float):
        users = {u.user_id: u for u in self.users}
        for uid in sorted(allocation.entries):
            entry = allocation.entries[uid]
            user = users[uid]
            self.artifacts.trace_rows.append({
                "frame": frame,
                "user": uid,
                "class": user.traffic_class.value,
                "p": entry.power,
                "w_subchannels": entry.n_subchannels,
                "mcs_index": entry.mcs.index,
                "served_rate": entry.served_rate,
                "q_bits": user.queue.q_bits,
                "hol_ms": user.queue.hol_delay(now) * 1000.0,
            })

    def _control_video_rates(self, frame: int):
        video = self.config.video
        for rt in self.runtimes:
            user = rt.user
            if not user.elastic:
                continue
            user.lam = rate_controller_step(
                user.profile, user.queue, user.lam, video.lambda_max,
                video.increase_below, video.decrease_above,
            )
            rt.source.lam = user.lam
            if self.config.output.lambda_trace:
                self.artifacts.lambda_rows.append({
                    "frame": frame, "user": user.user_id, "lambda": user.lam, "q_bits": user.queue.q_bits,
                })

    def _update_statistics(self):
        """
        Filter the bits each queue just drained into R, and every real-time
        user's transmission indicator into omega.

        A real-time user that got nothing this frame, selected or not, counts
        as a frame without transmission.
        """
        frame_len = self.config.system.frame_len
        for user in self.users:
            queue = user.queue
            update_avg_rate(queue, queue.last_served_bits / frame_len)
            if user.traffic_class.is_realtime:
                update_omega(queue, queue.last_served_bits > 0)

    def run(self) -> MetricsReport:
        """Run every configured frame and reduce the measurements to a MetricsReport"""
        c = self.config
        system = c.system
        frame_len = system.frame_len
        metrics = MetricsAccumulator(self.users, frame_len, system.bad_ring_km)
        lambda_sum: Dict[int, float] = {u.user_id: 0.0 for u in self.users if u.elastic}
        elastic_video = system.video_mode is VideoMode.ELASTIC
        period = c.video.controller_period_frames

        logger.info("Running %s with %s: %d users, %d frames",
                    c.name, self.scheduler.get_scheduler_name(), len(self.users), system.n_frames)

        for frame in range(system.n_frames):
            now = frame * frame_len
            gains = {}
            for rt in self.runtimes:
                self.channel_model.advance(rt.channel, frame)
                gains[rt.user.user_id] = gain(rt.channel)
            for rt in self.runtimes:
                rt.user.queue.push(rt.source.generate(frame, now, rt.user.queue))
                rt.user.queue.record_hol(now)

            allocation = self.scheduler.schedule(FrameContext(frame, now, self.users, gains))
            self._check_allocation(frame, allocation, gains)
            if allocation.solver_status is not None:
                self.solver_stats[allocation.solver_status.value] += 1
            if c.output.trace:
                self._trace(frame, allocation, now)

            measuring = frame >= system.warmup_frames
            departure = now + frame_len
            for user in self.users:
                queue = user.queue
                _, delays = serve(queue, allocation.served_rate(user.user_id), frame_len, departure)
                if measuring:
                    metrics.record(user, delays, queue.last_served_bits)
            self._update_statistics()

            if elastic_video and (frame + 1) % period == 0:
                self._control_video_rates(frame)
            if measuring:
                metrics.end_frame()
                for user in self.users:
                    if user.elastic:
                        lambda_sum[user.user_id] += user.lam

            if self.progress_callback and (frame + 1) % PROGRESS_EVERY == 0:
                self.progress_callback(frame + 1, system.n_frames, f"Frame {frame + 1}/{system.n_frames}")

        end_time = system.n_frames * frame_len
        if system.censor_in_flight and metrics.frames > 0:
            metrics.censor(end_time, system.warmup_frames * frame_len)

        elastic_classes = [TrafficClass.BE] + ([TrafficClass.STREAMING] if elastic_video else [])
        mean_lambda = {uid: s / metrics.frames for uid, s in lambda_sum.items()} if metrics.frames else {}
        report = metrics.report(
            c.name, self.scheduler.get_scheduler_name(), elastic_classes,
            dict(self.solver_stats), mean_lambda,
        )
        logger.info("Finished %s with %s: %d frames measured, data throughput %.4g bps",
                    c.name, report.scheduler, report.frames_measured, report.total_data_throughput)
        if self.degraded_fraction() > c.solver.max_degraded_fraction:
            logger.warning("%.2f%% of PF solves ended degraded", 100 * self.degraded_fraction())
        return report

    def degraded_fraction(self) -> float:
        """Share of PF solves that ended degraded"""
        solves = sum(self.solver_stats.values())
        if solves == 0:
            return 0.0
        return self.solver_stats.get("degraded", 0) / solves


def run(config: SimConfig, progress_callback: Optional[Callable[[int, int, str], None]] = None) -> MetricsReport:
    """Run one scenario; deterministic for a given config and seed"""
    return SimulationService(config, progress_callback=progress_callback).run()
