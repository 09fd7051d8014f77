#!/usr/bin/env python3
"""
Tests for the frame-loop engine, metrics, result files, sweeps and the CLI.
"""

import pandas as pd
import pytest
import yaml

import main as cli
from core.models import Allocation, Packet, PfProblem, SchedulerKind, SweepAxis, TrafficClass, UserAllocation
from radio.phy_mcs import MCS_TABLE
from services.metrics_service import MetricsAccumulator, percentile
from services.report_writer import LAMBDA_COLUMNS, SUMMARY_COLUMNS, TRACE_COLUMNS, ReportWriter
from services.simulation_service import SimulationService, run
from services.sweep_service import point_seed, sweep, write_sweep
from traffic.queues import serve

from conftest import make_user


def _single_voice(default_config, scheduler):
    return default_config.with_overrides(
        system__n_frames=10000,
        system__distances_km=[0.3],
        system__users={"voip": 1, "video": 0, "be": 0},
        system__scheduler=scheduler,
    )


# ---------------------------------------------------------------- percentile

def test_percentile_examples():
    samples = [i / 1000.0 for i in range(1, 101)]
    assert percentile(samples) == pytest.approx(0.095)
    assert percentile([0.02]) == 0.02
    assert percentile([0.004] * 17) == 0.004
    assert percentile([]) is None
    assert percentile([0.1, 0.3, 0.2], q=1.0) == 0.3


def test_percentile_rejects_bad_quantile():
    with pytest.raises(ValueError):
        percentile([1.0], q=0.0)


def test_metrics_rows_split_rings():
    users = [make_user(0, ring_km=0.3), make_user(1, ring_km=1.5)]
    metrics = MetricsAccumulator(users, 0.001, bad_ring_km=1.5)
    metrics.record(users[0], [0.001, 0.002], 1280)
    metrics.record(users[1], [0.2], 640)
    metrics.end_frame()
    labels = [(r.traffic_class, r.ring) for r in metrics.rows()]
    assert labels == [("voip", "0.3"), ("voip", "1.5"), ("voip", "good"), ("voip", "bad"), ("voip", "all")]
    bad = next(r for r in metrics.rows() if r.ring == "bad")
    assert bad.violation_rate == 1.0
    assert bad.delay_p95_ms == pytest.approx(200.0)
    assert metrics.throughput(0) == pytest.approx(1280 / 0.001)


def test_censoring_counts_packets_left_in_queue():
    user = make_user(0)
    user.queue.push([Packet(0.5, 640), Packet(0.05, 640)])
    metrics = MetricsAccumulator([user], 0.001, bad_ring_km=1.5)
    metrics.end_frame()
    metrics.censor(end_time=1.0, window_start=0.1)
    assert metrics.delays[0] == [pytest.approx(0.5)]
    assert metrics.violations[0] == 1


# ---------------------------------------------------------------- engine

def test_zero_frames_gives_empty_report(default_config):
    report = run(default_config.with_overrides(system__n_frames=0))
    assert report.frames_measured == 0
    assert report.rows == []
    assert report.total_data_throughput == 0.0
    assert report.logsum == 0.0


def test_single_voice_user_mlwdf(default_config):
    report = run(_single_voice(default_config, "mlwdf"))
    row = report.row("voip")
    assert report.frames_measured == 8000
    assert row.n_samples >= 390
    assert row.delay_p95_ms <= 2.0
    assert row.violation_rate == 0.0


def test_single_voice_user_dra(default_config):
    """DRA waits until the queue passes half the delay-bandwidth product, then drains it."""
    report = run(_single_voice(default_config, "dra"))
    row = report.row("voip")
    assert row.violation_rate == 0.0
    assert row.delay_p95_ms < 100.0


def test_omega_counts_unserved_frames_for_every_realtime_user(small_config):
    service = SimulationService(small_config)
    voice = next(u for u in service.users if u.traffic_class is TrafficClass.VOIP)
    for user in service.users:
        user.queue.last_served_bits = 0
    voice.queue.last_served_bits = 640
    service._update_statistics()
    for user in service.users:
        queue = user.queue
        if user is voice:
            assert queue.omega == pytest.approx(1.0)
            assert queue.avg_rate == pytest.approx(queue.alpha * 32000 + (1 - queue.alpha) * 640e3)
        elif user.traffic_class.is_realtime:
            assert queue.omega == pytest.approx(queue.alpha)
        else:
            assert queue.omega == 1.0


def test_avg_rate_follows_drained_bits_not_the_grant(small_config):
    """A voice grant far above its backlog only raises R by what the queue held."""
    config = small_config.with_overrides(system__users={"voip": 1, "video": 0, "be": 0})
    service = SimulationService(config)
    voice = service.users[0]
    voice.queue.push([Packet(0.0, 640)])
    allocation = Allocation(frame=0, entries={0: UserAllocation(
        user_id=0, power=1.0, bandwidth=312500.0, n_subchannels=1, mcs=MCS_TABLE[8], served_rate=1.40625e6,
    )})
    serve(voice.queue, allocation.served_rate(0), 0.001, 0.001)
    service._update_statistics()
    assert voice.queue.last_served_bits == 640
    assert voice.queue.avg_rate == pytest.approx(0.98 * 32000 + 0.02 * 640e3)


@pytest.mark.parametrize("scheduler", ["dra", "mlwdf"])
def test_conservation_and_budgets(small_config, scheduler):
    service = SimulationService(small_config.with_overrides(system__scheduler=scheduler))
    report = service.run()
    assert report.frames_measured == 300
    for user in service.users:
        queue = user.queue
        assert queue.arrived_bits == queue.served_bits + queue.q_bits
        assert queue.q_bits == sum(p.remaining for p in queue.fifo)
    assert {r.traffic_class for r in report.rows} == {"voip", "video", "be"}
    assert report.total_data_throughput > 0


def test_identical_seeds_give_identical_files(small_config, tmp_path):
    paths = []
    for name in ("a", "b"):
        report = run(small_config)
        paths.append(ReportWriter(tmp_path / name).write_summary([report]))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_different_seeds_differ(small_config):
    a = run(small_config)
    b = run(small_config.with_overrides(system__seed=99))
    assert a.total_data_throughput != b.total_data_throughput


def test_elastic_video_records_rate_levels(small_config):
    config = small_config.with_overrides(system__video_mode="elastic", traffic__video__controller_period_frames=50)
    service = SimulationService(config)
    report = service.run()
    assert set(report.mean_lambda) == {u.user_id for u in service.users if u.traffic_class is TrafficClass.STREAMING}
    assert all(1.0 <= v <= 8.0 for v in report.mean_lambda.values())
    rows = service.artifacts.lambda_rows
    assert len(rows) == 2 * (400 // 50)
    assert all(1 <= r["lambda"] <= 8 for r in rows)


def test_trace_rows(small_config):
    service = SimulationService(small_config.with_overrides(output__trace=True, system__n_frames=150))
    service.run()
    rows = service.artifacts.trace_rows
    assert rows
    assert set(rows[0]) == set(TRACE_COLUMNS) - {"scheduler"}
    assert all(1 <= r["w_subchannels"] <= 32 for r in rows)


def test_progress_callback(small_config):
    calls = []
    config = small_config.with_overrides(system__n_frames=2000, system__warmup_frames=0)
    SimulationService(config, progress_callback=lambda c, t, m: calls.append((c, t))).run()
    assert calls == [(1000, 2000), (2000, 2000)]


# ---------------------------------------------------------------- result files

def test_report_writer_files(small_config, tmp_path):
    service = SimulationService(small_config.with_overrides(system__video_mode="elastic"))
    report = service.run()
    writer = ReportWriter(tmp_path / "out")
    summary = writer.write_summary([report])
    frame = pd.read_csv(summary)
    assert list(frame.columns) == SUMMARY_COLUMNS
    assert set(frame["scheduler"]) == {"dra"}

    assert writer.write_trace([]) is None
    rows = [{"scheduler": "dra", **r} for r in service.artifacts.lambda_rows]
    lam = pd.read_csv(writer.write_lambda(rows))
    assert list(lam.columns) == LAMBDA_COLUMNS

    manifest = yaml.safe_load(writer.write_manifest(small_config, [report]).read_text(encoding="utf-8"))
    assert manifest["schema_version"] == "1.0"
    assert manifest["config"]["system"]["n_frames"] == 400
    assert manifest["runs"][0]["scheduler"] == "dra"
    assert "python_version" in manifest["system_info"]


# ---------------------------------------------------------------- sweeps

def test_sweep_runs_each_point_for_both_schedulers(default_config, tmp_path):
    base = default_config.with_overrides(
        system__n_frames=300, system__warmup_frames=100,
        system__users={"voip": 5, "video": 5, "be": 5},
    )
    table = sweep(base, SweepAxis.VIDEO_USERS, [5], [SchedulerKind.DRA, SchedulerKind.MLWDF], max_workers=1)
    assert len(table) == 2
    assert list(table["scheduler"]) == ["dra", "mlwdf"]
    assert list(table["status"]) == ["ok", "ok"]
    assert table["seed"].nunique() == 1
    assert table["seed"].iloc[0] == point_seed(base.system.seed, SweepAxis.VIDEO_USERS, 5)
    assert (tmp_path / "sweep.csv") == write_sweep(table, tmp_path)


def test_sweep_records_failed_points(default_config):
    base = default_config.with_overrides(system__n_frames=50, system__warmup_frames=0)
    # 3 video users cannot be spread over 5 rings
    table = sweep(base, SweepAxis.VIDEO_USERS, [3], [SchedulerKind.MLWDF], max_workers=1)
    assert list(table["status"]) == ["failed"]
    assert "video_users=3" in table["error"].iloc[0]


# ---------------------------------------------------------------- CLI

@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump({
        "name": "cli-test",
        "system": {
            "n_frames": 300,
            "warmup_frames": 100,
            "distances_km": [0.3],
            "users": {"voip": 2, "video": 2, "be": 2},
        },
        "solver": {"max_degraded_fraction": 0.5},
    }), encoding="utf-8")
    return path


def test_cli_run_both_schedulers(scenario_file, tmp_path):
    out = tmp_path / "results"
    assert cli.main(["run", "--config", str(scenario_file), "--scheduler", "both", "--out", str(out)]) == 0
    summary = pd.read_csv(out / "summary.csv")
    assert set(summary["scheduler"]) == {"dra", "mlwdf"}
    assert (out / "run.yaml").exists()


def test_cli_missing_config_exits_2(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == 2


def test_cli_invalid_scenario_exits_2(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("system:\n  users: {voip: 3, video: 0, be: 0}\n", encoding="utf-8")
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_cli_degraded_solves_exit_3(scenario_file, tmp_path, monkeypatch):
    monkeypatch.setattr(SimulationService, "degraded_fraction", lambda self: 0.75)
    assert cli.main(["run", "--config", str(scenario_file), "--out", str(tmp_path / "r")]) == 3


def test_cli_config_value(scenario_file, capsys):
    assert cli.main(["config", "--config", str(scenario_file), "system.n_frames"]) == 0
    assert capsys.readouterr().out.strip() == "300"


def test_cli_solve(tmp_path, capsys):
    problem = PfProblem(phi=[1.0, 1.0], noise=[1e-13, 1e-13], r_min=[0.0, 0.0],
                        power_budget=2.0, bandwidth_budget=2e6)
    path = tmp_path / "problem.yaml"
    path.write_text(problem.to_text(), encoding="utf-8")
    assert cli.main(["solve", str(path), "--oracle", "20"]) == 0
    out = capsys.readouterr().out
    assert "status: optimal" in out
    assert "oracle objective" in out


def test_cli_sweep(scenario_file, tmp_path):
    out = tmp_path / "sweep"
    argv = ["sweep", "--config", str(scenario_file), "--axis", "video_users", "--values", "2,4",
            "--schedulers", "mlwdf", "--workers", "1", "--out", str(out)]
    assert cli.main(argv) == 0
    table = pd.read_csv(out / "sweep.csv")
    assert list(table["value"]) == [2, 4]
    assert set(table["status"]) == {"ok"}


def test_cli_info(capsys):
    assert cli.main(["info"]) == 0
    assert "python_version" in capsys.readouterr().out
