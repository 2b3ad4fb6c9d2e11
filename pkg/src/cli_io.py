"""Command-line entry point: parse arguments, run the pipeline, map errors to exit codes."""

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.config import settings
from src.errors import StackelbergError
from src.exporters import write_json
from src.pipeline import COMMANDS, create_initial_state, get_pipeline_graph
from src.utils.logger import attach_run_log, detach_run_log, get_logger

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stackelberg",
        description="Traffic/pollution simulation and Stackelberg junction control.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", type=Path, help="Scenario JSON (all commands but report)")
    parser.add_argument("--out", type=Path, help="Artifact directory")
    parser.add_argument("--seed", type=int, help="Overrides the scenario seed")
    parser.add_argument("--threads", type=int, help=f"Concurrent evaluations (default {settings.THREADS})")
    parser.add_argument("--relaxed", action="store_true", help="Bound free beta entries to [0.2, 0.8]")
    parser.add_argument("--hybrid-follower", action="store_true", help="GA before the follower local search")
    parser.add_argument("--case", help="Label used in the comparison report")
    parser.add_argument("--runs", type=Path, nargs="+", help="Run directories to compare (report)")
    parser.add_argument("--cache-dir", type=Path, help=f"Adjoint cache directory (default {settings.CACHE_DIR})")
    parser.add_argument("--no-cache", action="store_true", help="Always solve the adjoint")
    return parser


def _scenario_output_dir(path: Path) -> Optional[str]:
    try:
        return json.loads(path.read_text(encoding="utf-8")).get("output_dir")
    except (OSError, ValueError, AttributeError):
        return None


def resolve_out_dir(args: argparse.Namespace) -> Path:
    """--out, else the scenario's output_dir, else OUTPUT_DIR/<scenario>_<command>."""
    if args.out:
        return args.out
    if args.command == "report" or args.scenario is None:
        return settings.OUTPUT_DIR / "report"
    name = f"{args.scenario.stem}_{args.command}" + ("_relaxed" if args.relaxed else "")
    configured = _scenario_output_dir(args.scenario)
    if configured:
        return Path(configured) / name
    return settings.OUTPUT_DIR / name


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "threads": args.threads,
        "relaxed": args.relaxed,
        "hybrid_follower": args.hybrid_follower,
        "case": args.case,
        "runs": [str(r) for r in args.runs or []],
        "cache_dir": str(args.cache_dir) if args.cache_dir else None,
        "use_cache": not args.no_cache,
    }


def _report_error(error: Dict[str, Any], out_dir: Path) -> None:
    try:
        write_json(error, out_dir / "error.json")
    except OSError as e:
        logger.error(f"Could not write error.json: {e}")
    print(json.dumps(error, sort_keys=True), file=sys.stderr)


def run(args: argparse.Namespace) -> int:
    """
    Execute one command and return its exit code.

    0 success, 2 invalid scenario or configuration, 3 numerical failure,
    4 budget exhausted (best-so-far result written), 1 anything unexpected.
    """
    if args.command != "report" and args.scenario is None:
        _report_error({"error": "usage", "message": "--scenario is required", "exit_code": 2}, resolve_out_dir(args))
        return 2
    if args.command == "report" and not args.runs:
        _report_error({"error": "usage", "message": "--runs is required", "exit_code": 2}, resolve_out_dir(args))
        return 2

    out_dir = resolve_out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = attach_run_log(out_dir / settings.RUN_LOG_NAME)
    started = time.perf_counter()
    try:
        logger.info(f"Running '{args.command}' -> {out_dir}")
        state = create_initial_state(args.command, out_dir, args.scenario, _flags(args))
        final = get_pipeline_graph().invoke(state)

        report = final.get("report")
        if report is not None:
            print(report.to_text())
        exit_code = final.get("exit_code", 0)
        logger.info(f"Finished '{args.command}' in {time.perf_counter() - started:.2f} s (exit {exit_code})")
        return exit_code

    except StackelbergError as e:
        logger.error(f"{args.command} failed: {e}")
        _report_error(e.to_dict(), out_dir)
        return e.exit_code

    except KeyboardInterrupt:
        logger.warning("Interrupted")
        _report_error({"error": "interrupted", "message": "run interrupted", "exit_code": 1}, out_dir)
        return 1

    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        _report_error({"error": "unexpected", "message": str(e), "exit_code": 1}, out_dir)
        return 1

    finally:
        detach_run_log(handler)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
