"""
Shared pytest fixtures and options.

Long scenario runs are marked ``slow`` and only collected with --run-slow.
"""

import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from core.config import SimConfig  # noqa: E402
from core.models import SimUser, TrafficClass, TrafficProfile  # noqa: E402
from radio.phy_mcs import MCS_TABLE  # noqa: E402
from schedulers.base import RadioParams  # noqa: E402
from traffic.queues import QueueState  # noqa: E402

N0 = 10 ** (-169 / 10) * 1e-3


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run long scenario tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long scenario reproduction, needs --run-slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def radio():
    """Default cell: 20 W, 10 MHz, 32 subchannels, 1 ms frames"""
    return RadioParams(
        total_power=20.0,
        bandwidth=10e6,
        n_subchannels=32,
        n0=N0,
        beta=0.25,
        frame_len=0.001,
        mcs_table=MCS_TABLE,
    )


@pytest.fixture
def default_config():
    return SimConfig.default()


@pytest.fixture
def small_config(default_config):
    """Short single-ring scenario with a handful of users per class"""
    return default_config.with_overrides(
        system__n_frames=400,
        system__warmup_frames=100,
        system__distances_km=[0.3],
        system__users={"voip": 2, "video": 2, "be": 2},
    )


def make_profile(traffic_class=TrafficClass.VOIP, r0=32000.0, d_max=0.1, delta=0.05,
                 alpha=0.98, phi=1.0) -> TrafficProfile:
    return TrafficProfile(
        traffic_class=traffic_class, r0=r0, r_max=r0, d_max=d_max, delta=delta, phi=phi, alpha=alpha,
    )


def make_user(user_id, traffic_class=TrafficClass.VOIP, ring_km=0.3, profile=None,
              avg_rate=None, full_buffer=False, **queue_kwargs) -> SimUser:
    """User with an empty queue; avg_rate defaults to the profile's basic rate"""
    profile = profile or make_profile(traffic_class)
    initial_rate = avg_rate if avg_rate is not None else max(profile.r0, 1e5)
    queue = QueueState(alpha=profile.alpha, initial_rate=initial_rate, full_buffer=full_buffer,
                       hol_cap=profile.d_max if full_buffer else None, **queue_kwargs)
    return SimUser(user_id, traffic_class, ring_km, profile, queue)
