"""
Result files of simulation runs.

summary.csv has one row per (scheduler, class, ring); trace.csv and
lambda.csv are optional per-frame records; run.yaml records the exact
configuration and environment of the run.
"""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Optional

import pandas as pd
import yaml

from core.config import SCHEMA_VERSION, SimConfig
from core.models import MetricsReport
from utils.system_utils import SystemUtils

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "scenario", "scheduler", "class", "ring_km",
    "delay_p95_ms", "violation_rate", "throughput_bps", "logsum",
]
TRACE_COLUMNS = [
    "scheduler", "frame", "user", "class", "p", "w_subchannels", "mcs_index", "served_rate", "q_bits", "hol_ms",
]
LAMBDA_COLUMNS = ["scheduler", "frame", "user", "lambda", "q_bits"]


def _plain(value):
    """Nested tuples become lists so the safe YAML dumper accepts them"""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def summary_frame(reports: Iterable[MetricsReport]) -> pd.DataFrame:
    records = []
    for report in reports:
        for row in report.rows:
            records.append({
                "scenario": report.scenario,
                "scheduler": report.scheduler,
                "class": row.traffic_class,
                "ring_km": row.ring,
                "delay_p95_ms": row.delay_p95_ms,
                "violation_rate": row.violation_rate,
                "throughput_bps": row.throughput_bps,
                "logsum": report.logsum,
            })
    return pd.DataFrame.from_records(records, columns=SUMMARY_COLUMNS)


class ReportWriter:
    """Writes the result files of one run directory"""

    def __init__(self, out_dir: Path):
        self.out_dir = SystemUtils.ensure_directory(out_dir)

    def write_summary(self, reports: List[MetricsReport]) -> Path:
        path = self.out_dir / "summary.csv"
        summary_frame(reports).to_csv(path, index=False)
        logger.info("Wrote %s", path)
        return path

    def write_rows(self, name: str, rows: List[dict], columns: List[str]) -> Optional[Path]:
        """Write per-frame records; nothing is written for an empty record list"""
        if not rows:
            return None
        path = self.out_dir / name
        pd.DataFrame.from_records(rows, columns=columns).to_csv(path, index=False)
        logger.info("Wrote %s (%d rows)", path, len(rows))
        return path

    def write_trace(self, rows: List[dict]) -> Optional[Path]:
        return self.write_rows("trace.csv", rows, TRACE_COLUMNS)

    def write_lambda(self, rows: List[dict]) -> Optional[Path]:
        return self.write_rows("lambda.csv", rows, LAMBDA_COLUMNS)

    def write_manifest(self, config: SimConfig, reports: List[MetricsReport],
                       extra: Optional[dict] = None) -> Path:
        """run.yaml: schema version, full configuration, environment and solver statistics"""
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "scenario": config.name,
            "system_info": SystemUtils.get_system_info(),
            "config": config.to_dict(),
            "runs": [
                {
                    "scheduler": r.scheduler,
                    "frames_measured": r.frames_measured,
                    "total_data_throughput": r.total_data_throughput,
                    "logsum": r.logsum,
                    "solver_stats": dict(r.solver_stats),
                }
                for r in reports
            ],
        }
        if extra:
            manifest.update(extra)
        path = self.out_dir / "run.yaml"
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(_plain(manifest), f, sort_keys=False)
        return path
