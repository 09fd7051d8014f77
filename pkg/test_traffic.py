#!/usr/bin/env python3
"""
Tests for traffic sources, queue service and the elastic video rate controller.
"""

import numpy as np
import pytest

from core.config import SimConfig
from core.models import BestEffortMode, Packet, TrafficClass
from traffic import (
    BestEffortSource,
    QueueState,
    VideoSource,
    VoipSource,
    bounded_pareto_mean,
    bounded_pareto_sample,
    rate_controller_step,
    serve,
    update_avg_rate,
    update_omega,
)

from conftest import make_profile


@pytest.fixture
def config():
    return SimConfig.default()


def test_voip_cbr(config):
    source = VoipSource(config.voip, 0.001)
    queue = QueueState(alpha=0.98, initial_rate=32000)
    packets = []
    for frame in range(1000):
        packets.extend(source.generate(frame, frame * 0.001, queue))
    assert len(packets) == 50
    assert sum(p.size for p in packets) == 32000
    assert source.mean_rate() == pytest.approx(32000)


def test_voip_offsets_stagger_arrivals(config):
    a = VoipSource(config.voip, 0.001, offset=0)
    b = VoipSource(config.voip, 0.001, offset=3)
    queue = QueueState(alpha=0.98, initial_rate=32000)
    assert a.generate(0, 0.0, queue) and not b.generate(0, 0.0, queue)
    assert b.generate(3, 0.003, queue)


def test_bounded_pareto_sampler_stays_in_range():
    rng = np.random.default_rng(0)
    draws = [bounded_pareto_sample(rng, 1.2, 2.5, 12.5) for _ in range(5000)]
    assert min(draws) >= 2.5 and max(draws) <= 12.5
    assert np.mean(draws) == pytest.approx(bounded_pareto_mean(1.2, 2.5, 12.5), rel=0.03)


def test_video_mean_rate(config):
    """One-second frames keep the loop short; the arrival process does not depend on frame length."""
    source = VideoSource(config.video, 1.0, np.random.default_rng(42))
    queue = QueueState(alpha=0.98, initial_rate=128000)
    total = 0
    frames = 2000
    for frame in range(frames):
        total += sum(p.size for p in source.generate(frame, float(frame), queue))
    mean_rate = total / frames
    assert 121600 <= mean_rate <= 134400


def test_video_rate_level_scales_sizes_only(config):
    base = VideoSource(config.video, 0.001, np.random.default_rng(9))
    doubled = VideoSource(config.video, 0.001, np.random.default_rng(9))
    doubled.lam = 2
    queue = QueueState(alpha=0.98, initial_rate=128000)
    for frame in range(2000):
        now = frame * 0.001
        a = base.generate(frame, now, queue)
        b = doubled.generate(frame, now, queue)
        assert len(a) == len(b)
        assert [2 * p.size for p in a] == [p.size for p in b]


def test_video_arrivals_stamped_at_frame_start(config):
    source = VideoSource(config.video, 0.001, np.random.default_rng(1))
    queue = QueueState(alpha=0.98, initial_rate=128000)
    for frame in range(500):
        now = frame * 0.001
        for packet in source.generate(frame, now, queue):
            assert packet.arrival_time == now


def test_best_effort_full_buffer_never_drains(config):
    max_bits = 4.5 * 10e6 * 0.001
    source = BestEffortSource(config.be, 0.001, max_bits)
    queue = QueueState(alpha=0.98, initial_rate=1e5, full_buffer=True, hol_cap=0.1)
    for frame in range(50):
        now = frame * 0.001
        queue.push(source.generate(frame, now, queue))
        assert queue.q_bits > max_bits
        serve(queue, max_bits / 0.001, 0.001, now + 0.001)
        assert queue.q_bits > 0
    assert source.mean_rate() == float("inf")


def test_best_effort_file_mode(config):
    be = config.with_overrides(traffic__be__mode="file", traffic__be__file_bytes=1000).be
    assert be.mode is BestEffortMode.FILE
    source = BestEffortSource(be, 0.001, 45000)
    queue = QueueState(alpha=0.98, initial_rate=1e5)
    first = source.generate(0, 0.0, queue)
    assert [p.size for p in first] == [8000]
    queue.push(first)
    assert source.generate(1, 0.001, queue) == []
    serve(queue, 8e6, 0.001, 0.002)
    assert [p.size for p in source.generate(2, 0.002, queue)] == [8000]


def test_serve_examples():
    queue = QueueState(alpha=0.98, initial_rate=1e5)
    queue.push([Packet(0.0, 640)])
    departed, delays = serve(queue, 640000, 0.001, 0.005)
    assert len(departed) == 1
    assert delays == [pytest.approx(0.005)]
    assert queue.q_bits == 0

    queue.push([Packet(0.01, 640)])
    departed, delays = serve(queue, 320000, 0.001, 0.011)
    assert departed == [] and delays == []
    assert queue.fifo[0].remaining == 320
    assert queue.q_bits == 320

    empty = QueueState(alpha=0.98, initial_rate=1e5)
    assert serve(empty, 1e9, 0.001, 0.0) == ([], [])


def test_serve_conserves_bits():
    queue = QueueState(alpha=0.98, initial_rate=1e5)
    queue.push([Packet(0.0, 500), Packet(0.0, 700), Packet(0.0, 300)])
    served = 0
    for frame in range(10):
        serve(queue, 400000, 0.001, (frame + 1) * 0.001)
        served += queue.last_served_bits
    assert served + queue.q_bits == queue.arrived_bits == 1500
    assert queue.served_bits == served == 1500


def test_serve_rejects_negative_rate():
    with pytest.raises(ValueError):
        serve(QueueState(alpha=0.98, initial_rate=1e5), -1.0, 0.001, 0.0)


def test_avg_rate_filter():
    queue = QueueState(alpha=0.98, initial_rate=100000)
    assert update_avg_rate(queue, 200000) == pytest.approx(102000)

    queue = QueueState(alpha=0.98, initial_rate=100000)
    for _ in range(10):
        update_avg_rate(queue, 0.0)
    assert queue.avg_rate == pytest.approx(100000 * 0.98 ** 10)

    queue = QueueState(alpha=0.98, initial_rate=0.0)
    for _ in range(2000):
        update_avg_rate(queue, 50000)
    assert queue.avg_rate == pytest.approx(50000, rel=1e-6)


def test_omega_filter():
    queue = QueueState(alpha=0.995, initial_rate=0.0, initial_omega=0.5)
    assert update_omega(queue, True) == pytest.approx(0.5025)

    queue = QueueState(alpha=0.995, initial_rate=0.0)
    for _ in range(100):
        update_omega(queue, False)
    assert queue.omega == pytest.approx(0.995 ** 100)

    queue = QueueState(alpha=0.9, initial_rate=0.0, initial_omega=0.0)
    for _ in range(500):
        update_omega(queue, True)
    assert queue.omega == pytest.approx(1.0)


def test_hol_delay():
    queue = QueueState(alpha=0.98, initial_rate=1e5)
    assert queue.hol_delay(1.0) == 0.0
    queue.push([Packet(0.25, 100)])
    assert queue.hol_delay(0.3) == pytest.approx(0.05)

    full = QueueState(alpha=0.98, initial_rate=1e5, full_buffer=True, hol_cap=0.1)
    full.push([Packet(0.0, 10**6)])
    assert full.hol_delay(0.04) == pytest.approx(0.04)
    assert full.hol_delay(5.0) == pytest.approx(0.1)


def _queue_with_mean_hol(mean_hol):
    queue = QueueState(alpha=0.98, initial_rate=128000)
    queue.hol_history.append(mean_hol)
    return queue


def test_rate_controller_examples():
    profile = make_profile(TrafficClass.STREAMING, r0=128000, d_max=0.4, delta=0.05)
    assert rate_controller_step(profile, _queue_with_mean_hol(0.03), 3) == 4
    assert rate_controller_step(profile, _queue_with_mean_hol(0.12), 3) == 2
    assert rate_controller_step(profile, _queue_with_mean_hol(0.03), 8) == 8
    assert rate_controller_step(profile, _queue_with_mean_hol(0.07), 3) == 3
    assert rate_controller_step(profile, _queue_with_mean_hol(0.5), 1) == 1
