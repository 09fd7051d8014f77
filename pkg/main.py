"""
Main entry point for the OFDMA downlink simulator.

Provides a console interface to run scenarios, sweep user populations,
inspect the effective configuration and solve single PF problems.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import yaml

from core.config import config_manager, load_sim_config, SimConfig
from core.exceptions import SimulatorError
from core.models import PfProblem, SchedulerKind, SweepAxis, VideoMode
from optimization import brute_force_oracle, kkt_residuals, solve
from services.report_writer import ReportWriter
from services.simulation_service import SimulationService
from services.sweep_service import sweep, write_sweep
from utils.log_utils import setup_logging
from utils.system_utils import SystemUtils

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_DEGRADED = 3


class SimulatorConsole:
    """Console interface for the simulator"""

    def __init__(self, config_path: Optional[Path] = None):
        self.config = load_sim_config(config_path)

    def _apply_overrides(self, args) -> SimConfig:
        overrides = {}
        if getattr(args, "seed", None) is not None:
            overrides["system__seed"] = args.seed
        if getattr(args, "frames", None) is not None:
            overrides["system__n_frames"] = args.frames
        if getattr(args, "video_mode", None):
            overrides["system__video_mode"] = args.video_mode
        return self.config.with_overrides(**overrides) if overrides else self.config

    def _out_dir(self, args, config: SimConfig) -> Path:
        if args.out:
            return Path(args.out)
        return config_manager.default_output_dir() / config.name

    @staticmethod
    def _progress(current: int, total: int, message: str):
        logger.debug("%s (%d%%)", message, 100 * current // max(total, 1))

    def run(self, args) -> int:
        """Run one scenario with one or both schedulers"""
        config = self._apply_overrides(args)
        if args.scheduler == "both":
            kinds = [SchedulerKind.DRA, SchedulerKind.MLWDF]
        elif args.scheduler:
            kinds = [SchedulerKind(args.scheduler)]
        else:
            kinds = [config.system.scheduler]

        writer = ReportWriter(self._out_dir(args, config))
        reports = []
        worst_degraded = 0.0
        trace_rows, lambda_rows = [], []
        for kind in kinds:
            point = config.with_overrides(system__scheduler=kind.value)
            service = SimulationService(point, progress_callback=self._progress)
            reports.append(service.run())
            worst_degraded = max(worst_degraded, service.degraded_fraction())
            for row in service.artifacts.trace_rows:
                trace_rows.append({"scheduler": kind.value, **row})
            for row in service.artifacts.lambda_rows:
                lambda_rows.append({"scheduler": kind.value, **row})

        writer.write_summary(reports)
        writer.write_trace(trace_rows)
        writer.write_lambda(lambda_rows)
        writer.write_manifest(config, reports)

        for report in reports:
            print(f"{report.scheduler:6} frames={report.frames_measured} "
                  f"data_throughput={report.total_data_throughput:.4g} bps logsum={report.logsum:.4f}")
        print(f"Results written to {writer.out_dir}")

        if worst_degraded > config.solver.max_degraded_fraction:
            logger.error("Degraded PF solves %.2f%% exceed the allowed %.2f%%",
                         100 * worst_degraded, 100 * config.solver.max_degraded_fraction)
            return EXIT_DEGRADED
        return EXIT_OK

    def sweep(self, args) -> int:
        """Sweep one user population over a list of values"""
        config = self._apply_overrides(args)
        axis = SweepAxis(args.axis) if args.axis else None
        values = [int(v) for v in args.values.split(",")] if args.values else None
        schedulers = [SchedulerKind(s) for s in args.schedulers.split(",")] if args.schedulers else None
        table = sweep(config, axis, values, schedulers, args.workers, self._progress)
        path = write_sweep(table, self._out_dir(args, config))
        failed = int((table["status"] != "ok").sum())
        print(f"{len(table)} points, {failed} failed; results written to {path}")
        degraded = table["degraded_fraction"].dropna()
        if len(degraded) and degraded.max() > config.solver.max_degraded_fraction:
            return EXIT_DEGRADED
        return EXIT_OK if failed == 0 else EXIT_ERROR

    def show_config(self, args) -> int:
        """Print the effective configuration, or one value of it"""
        raw = self.config.to_dict()
        if args.key:
            print(config_manager.get_config_value(raw, args.key))
        else:
            print(yaml.safe_dump(raw, sort_keys=False), end="")
        return EXIT_OK

    def show_info(self, args) -> int:
        """Print platform information"""
        for key, value in SystemUtils.get_system_info().items():
            print(f"  {key:18} {value}")
        return EXIT_OK

    def solve_problem(self, args) -> int:
        """Solve one PF problem file and optionally compare with the grid oracle"""
        problem = PfProblem.from_text(Path(args.problem).read_text(encoding="utf-8"))
        solution = solve(problem, self.config.solver)
        print(f"status: {solution.status.value}")
        for i, uid in enumerate(problem.user_ids):
            print(f"  user {uid}: p={solution.power[i]:.6g} W  w={solution.bandwidth[i]:.6g} Hz  "
                  f"rate={solution.rate[i]:.6g} bps")
        print(f"objective: {solution.objective(problem.phi):.8g}")
        if solution.rate.size and (solution.rate > 0).all():
            for name, value in kkt_residuals(problem, solution).items():
                print(f"  {name}: {value:.3g}")
        if args.oracle:
            oracle = brute_force_oracle(problem, args.oracle)
            print(f"oracle objective ({args.oracle} points): {oracle.objective(problem.phi):.8g}")
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="OFDMA downlink scheduling simulator")
    parser.add_argument("--log-level", default=None, help="Logging level (default from config)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one scenario")
    run.add_argument("--config", type=Path, help="Scenario file (YAML or JSON)")
    run.add_argument("--seed", type=int)
    run.add_argument("--frames", type=int)
    run.add_argument("--scheduler", choices=[k.value for k in SchedulerKind] + ["both"])
    run.add_argument("--video-mode", choices=[m.value for m in VideoMode])
    run.add_argument("--out", help="Output directory")
    run.add_argument("--log-level", default=argparse.SUPPRESS)

    sw = sub.add_parser("sweep", help="Sweep video or data user counts")
    sw.add_argument("--config", type=Path)
    sw.add_argument("--axis", choices=[a.value for a in SweepAxis])
    sw.add_argument("--values", help="Comma-separated user counts")
    sw.add_argument("--schedulers", help="Comma-separated schedulers (default: dra,mlwdf)")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--frames", type=int)
    sw.add_argument("--video-mode", choices=[m.value for m in VideoMode])
    sw.add_argument("--workers", type=int)
    sw.add_argument("--out")
    sw.add_argument("--log-level", default=argparse.SUPPRESS)

    cfg = sub.add_parser("config", help="Show the effective configuration")
    cfg.add_argument("--config", type=Path)
    cfg.add_argument("key", nargs="?", help="Dot path, e.g. system.n_frames")

    info = sub.add_parser("info", help="Show system information")
    info.add_argument("--config", type=Path)

    pf = sub.add_parser("solve", help="Solve a PF problem file")
    pf.add_argument("problem", help="Problem file as written by PfProblem.to_text")
    pf.add_argument("--config", type=Path)
    pf.add_argument("--oracle", type=int, default=0, help="Also run the grid oracle with this many points")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        app = SimulatorConsole(args.config)
        setup_logging(args.log_level or app.config.log_level)
        handlers = {
            "run": app.run,
            "sweep": app.sweep,
            "config": app.show_config,
            "info": app.show_info,
            "solve": app.solve_problem,
        }
        return handlers[args.command](args)
    except SimulatorError as e:
        setup_logging()
        logger.error("%s (%s)", e, e.error_code)
        return EXIT_ERROR
    except ValueError as e:
        setup_logging()
        logger.error("Invalid argument: %s", e)
        return EXIT_ERROR
    except OSError as e:
        setup_logging()
        logger.error("Cannot read input: %s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nOperation cancelled by user")
        sys.exit(130)
