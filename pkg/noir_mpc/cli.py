"""Command-line interface for the NOIR boundary inflow controller."""

import argparse
import sys
import logging
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

from .core.config import NoirConfig
from .core.phoenix import phoenix_scenario
from .core.pipeline import NoirPipeline
from .core.scenario import load_scenario, save_scenario
from .dynamics.stability import stability_report
from .utils.logging_config import configure_logging
from .utils.exceptions import NoirError

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", type=str, default="config.yaml", help="Path to config.yaml")
    parser.add_argument("--log-file", type=str, help="Path to log file")
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Logging level (NOIR_MPC_LOG takes precedence)",
    )
    parser.add_argument("--verbose", action="store_true", help="Print one coloured line per step")


def _add_run_settings(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", "-o", type=str, help="Output directory")
    parser.add_argument("--steps", "-T", type=int, help="Number of closed-loop steps")
    parser.add_argument("--beta", type=float, help="Weight of the density term in the cost")
    parser.add_argument("--u0", type=float, help="Net boundary inflow per step")
    parser.add_argument("--eps", type=float, help="Liveness tolerance")
    parser.add_argument("--seed", type=int, help="Seed for randomised defaults")
    parser.add_argument("--solver", choices=["active_set", "splitting"], help="QP method")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        description="NOIR MPC - optimal boundary inflow control of signalised road networks"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run scenarios in closed loop")
    _add_common(simulate)
    _add_run_settings(simulate)
    simulate.add_argument("--scenario", "-s", type=str, action="append", required=True,
                          help="Scenario file; repeat for a batch")
    simulate.add_argument("--jobs", "-j", type=int, default=1, help="Concurrent runs in a batch")

    phoenix = commands.add_parser("phoenix", help="Run the built-in downtown Phoenix benchmark")
    _add_common(phoenix)
    _add_run_settings(phoenix)
    phoenix.add_argument("--save-scenario", type=str, help="Also write the benchmark scenario file")

    validate = commands.add_parser("validate", help="Check a scenario against every model invariant")
    _add_common(validate)
    validate.add_argument("--scenario", "-s", type=str, required=True)

    stability = commands.add_parser("stability", help="Print per-phase spectral radii")
    _add_common(stability)
    stability.add_argument("--scenario", "-s", type=str, required=True)

    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    return args


def load_config(config_path: str) -> Dict[str, Any]:
    """Load configuration from YAML file; a missing default file means built-in defaults."""
    path = Path(config_path)
    if not path.exists():
        logger.debug(f"No config file at {path}; using defaults")
        return {}
    try:
        with open(path, "r", encoding="utf-8") as file:
            return yaml.safe_load(file) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ValueError(f"Failed to load config from {config_path}: {str(e)}")


def override_config(config: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Override configuration with command-line arguments."""
    updated_config = {name: dict(section or {}) for name, section in config.items()}

    logging_section = updated_config.setdefault("logging", {})
    if args.log_level:
        logging_section["level"] = args.log_level
    if args.log_file:
        logging_section["file"] = args.log_file
    if args.verbose:
        logging_section["verbose"] = True

    if getattr(args, "out", None):
        updated_config.setdefault("output", {})["out_dir"] = args.out
    if getattr(args, "solver", None):
        updated_config.setdefault("solver", {})["method"] = args.solver
    if getattr(args, "beta", None) is not None:
        updated_config.setdefault("controller", {})["beta"] = args.beta
    return updated_config


def scenario_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Run settings given on the command line; they replace the scenario's values."""
    return {
        "T": args.steps,
        "beta": args.beta,
        "u0": args.u0,
        "eps": args.eps,
        "seed": args.seed,
    }


def _run_one(job: Tuple[str, Dict[str, Any], str, Dict[str, Any]]) -> Dict[str, Any]:
    """Worker for one scenario of a batch; owns its own controller and solver."""
    path, config_dict, out_dir, overrides = job
    config = NoirConfig.from_source(config_dict)
    try:
        result = NoirPipeline(config).run(path, out_dir=Path(out_dir), overrides=overrides)
    except NoirError as e:
        return {"scenario": path, "status": "error", "error": str(e)}
    verdict = result.trace.verdict
    return {
        "scenario": path,
        "status": result.trace.status,
        "error": result.trace.error,
        "violations": len(verdict.safety_violations) if verdict else None,
        "liveness": verdict.liveness.describe() if verdict else None,
        "out_dir": out_dir,
    }


def _print_summary(summary: Dict[str, Any]) -> None:
    line = f"{summary['scenario']}: {summary['status']}"
    if summary.get("violations") is not None:
        line += f", {summary['violations']} safety violations, liveness {summary['liveness']}"
    if summary.get("error"):
        line += f" ({summary['error']})"
    print(line)


def cmd_simulate(args: argparse.Namespace, config: NoirConfig) -> int:
    out_root = Path(config.output.out_dir)
    batch = len(args.scenario) > 1
    jobs = [
        (path, config.to_dict(), str(out_root / Path(path).stem if batch else out_root),
         scenario_overrides(args))
        for path in args.scenario
    ]
    if args.jobs > 1 and batch:
        with Pool(min(args.jobs, len(jobs))) as pool:
            summaries: List[Dict[str, Any]] = pool.map(_run_one, jobs)
    else:
        summaries = [_run_one(job) for job in jobs]

    for summary in summaries:
        _print_summary(summary)
    return 0 if all(s["status"] == "completed" for s in summaries) else 1


def cmd_phoenix(args: argparse.Namespace, config: NoirConfig) -> int:
    scenario = phoenix_scenario(config)
    if args.save_scenario:
        save_scenario(scenario, args.save_scenario)
    result = NoirPipeline(config).run(scenario, out_dir=Path(config.output.out_dir),
                                      overrides=scenario_overrides(args))
    trace = result.trace
    summary = {
        "scenario": scenario.name,
        "status": trace.status,
        "error": trace.error,
        "violations": len(trace.verdict.safety_violations) if trace.verdict else None,
        "liveness": trace.verdict.liveness.describe() if trace.verdict else None,
    }
    _print_summary(summary)
    return 0 if trace.completed else 1


def cmd_validate(args: argparse.Namespace, config: NoirConfig) -> int:
    scenario = load_scenario(args.scenario, config)
    report = stability_report(scenario.phase_matrices(config.dynamics))
    network = scenario.network
    print(f"{args.scenario}: N={network.size}, inlets={network.n_inlets}, "
          f"outlets={len(network.outlet_ids)}, junctions={len(scenario.schedule.junction_ids)}, "
          f"n_c={scenario.cycle_length}")
    if not report.stable:
        print(f"unstable: max spectral radius {report.max_radius!r}")
        return 1
    print("valid")
    return 0


def cmd_stability(args: argparse.Namespace, config: NoirConfig) -> int:
    scenario = load_scenario(args.scenario, config)
    report = stability_report(scenario.phase_matrices(config.dynamics))
    for zeta, radius in zip(report.zetas, report.radii):
        print(f"zeta={zeta} spectral_radius={radius:.12g}")
    print(f"cycle spectral_radius={report.cycle_radius:.12g}")
    print(f"stable={report.stable}")
    return 0 if report.stable else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "phoenix": cmd_phoenix,
    "validate": cmd_validate,
    "stability": cmd_stability,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the NOIR MPC CLI."""
    try:
        # Parse command-line arguments
        args = parse_args(argv)

        # Load configuration
        config_dict = load_config(args.config)

        # Override with command-line arguments
        config_dict = override_config(config_dict, args)

        # Create configuration object
        config = NoirConfig.from_source(config_dict)

        # Configure logging
        configure_logging(config.logging, args.log_file)

        logger.info(f"Running '{args.command}'")
        return COMMANDS[args.command](args, config)

    except NoirError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return 1

    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
