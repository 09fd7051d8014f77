"""
Parameter sweeps.

Every (value, scheduler) point is an independent simulation with its own
seed derived from the base seed and the point value, so both schedulers see
the same channels and traffic at each point. Points run in a process pool
and are merged back in point order; a failing point is recorded and the
sweep continues.
"""

import copy
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd

from core.config import SimConfig
from core.exceptions import SimulatorError, SweepPointError
from core.models import MetricsReport, SchedulerKind, SweepAxis, TrafficClass
from services.simulation_service import SimulationService
from utils.system_utils import SystemUtils

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "axis", "value", "scheduler", "seed", "status",
    "voip_p95_ms", "voip_bad_p95_ms", "voip_violation_rate",
    "video_p95_ms", "video_bad_p95_ms", "be_p95_ms",
    "total_data_throughput", "logsum", "degraded_fraction", "error",
]

AXIS_CLASS = {SweepAxis.VIDEO_USERS: TrafficClass.STREAMING, SweepAxis.DATA_USERS: TrafficClass.BE}
_AXIS_CODES = {SweepAxis.VIDEO_USERS: 1, SweepAxis.DATA_USERS: 2}


def point_seed(base_seed: int, axis: SweepAxis, value: int) -> int:
    return SystemUtils.derive_seed(base_seed, _AXIS_CODES[axis], value)


def point_config(base: SimConfig, axis: SweepAxis, value: int, scheduler: SchedulerKind) -> Dict:
    """Raw scenario dict of one sweep point"""
    raw = copy.deepcopy(base.to_dict())
    raw["system"]["users"] = dict(raw["system"].get("users") or {})
    raw["system"]["users"][AXIS_CLASS[axis].value] = int(value)
    raw["system"]["seed"] = point_seed(base.system.seed, axis, value)
    raw["system"]["scheduler"] = scheduler.value
    return raw


def _p95(report: MetricsReport, traffic_class: TrafficClass, ring: str = "all"):
    row = report.row(traffic_class.value, ring)
    return row.delay_p95_ms if row else None


def _run_point(raw: Dict, axis: str, value: int, scheduler: str) -> Dict:
    """Worker entry point; never raises"""
    row = {"axis": axis, "value": value, "scheduler": scheduler, "seed": raw["system"]["seed"]}
    try:
        service = SimulationService(SimConfig.from_dict(raw))
        report = service.run()
    except (SimulatorError, ArithmeticError, ValueError) as e:
        error = SweepPointError(axis, value, scheduler, str(e))
        logger.error(str(error))
        row.update(status="failed", error=str(error))
        return row

    voip = report.row(TrafficClass.VOIP.value)
    row.update(
        status="ok",
        voip_p95_ms=_p95(report, TrafficClass.VOIP),
        voip_bad_p95_ms=_p95(report, TrafficClass.VOIP, "bad"),
        voip_violation_rate=voip.violation_rate if voip else None,
        video_p95_ms=_p95(report, TrafficClass.STREAMING),
        video_bad_p95_ms=_p95(report, TrafficClass.STREAMING, "bad"),
        be_p95_ms=_p95(report, TrafficClass.BE),
        total_data_throughput=report.total_data_throughput,
        logsum=report.logsum,
        degraded_fraction=service.degraded_fraction(),
        error=None,
    )
    return row


def sweep(base: SimConfig, axis: Optional[SweepAxis] = None, values: Optional[Sequence[int]] = None,
          schedulers: Optional[Sequence[SchedulerKind]] = None, max_workers: Optional[int] = None,
          progress_callback: Optional[Callable[[int, int, str], None]] = None) -> pd.DataFrame:
    """
    Run every (value, scheduler) point of a sweep.

    Args:
        base: Scenario the sweep starts from
        axis: Swept user class (defaults to the config's sweep section)
        values: User counts to run
        schedulers: Schedulers to run at every point
        max_workers: Worker processes (defaults to the physical core count)
        progress_callback: Called with (done, total, message) after each point

    Returns:
        DataFrame with one row per point per scheduler, in point order
    """
    axis = axis or base.sweep.axis
    values = list(values if values is not None else base.sweep.values)
    schedulers = list(schedulers or base.sweep.schedulers)
    if not values:
        raise SweepPointError(axis.value, None, "-", "no sweep values given")

    jobs = [
        (point_config(base, axis, v, s), axis.value, int(v), s.value)
        for v in values for s in schedulers
    ]
    workers = min(len(jobs), SystemUtils.default_worker_count(max_workers or base.max_workers))
    logger.info("Sweeping %s over %s with %s (%d points, %d workers)",
                axis.value, values, [s.value for s in schedulers], len(jobs), workers)

    results: List[Optional[Dict]] = [None] * len(jobs)
    if workers <= 1:
        for i, job in enumerate(jobs):
            results[i] = _run_point(*job)
            if progress_callback:
                progress_callback(i + 1, len(jobs), f"{job[1]}={job[2]} {job[3]}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_point, *job): i for i, job in enumerate(jobs)}
            done = 0
            for future in as_completed(futures):
                i = futures[future]
                _, axis_name, value, scheduler = jobs[i]
                try:
                    results[i] = future.result()
                except Exception as e:
                    error = SweepPointError(axis_name, value, scheduler, repr(e))
                    logger.error(str(error))
                    results[i] = {"axis": axis_name, "value": value, "scheduler": scheduler,
                                  "seed": jobs[i][0]["system"]["seed"], "status": "failed",
                                  "error": str(error)}
                done += 1
                if progress_callback:
                    progress_callback(done, len(jobs), f"{axis_name}={value} {scheduler}")

    return pd.DataFrame.from_records(results, columns=SWEEP_COLUMNS)


def write_sweep(frame: pd.DataFrame, out_dir: Path) -> Path:
    path = SystemUtils.ensure_directory(out_dir) / "sweep.csv"
    frame.to_csv(path, index=False)
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path
