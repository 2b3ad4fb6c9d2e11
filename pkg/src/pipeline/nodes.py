"""Pipeline nodes: each reads the state, does one stage of a run and returns updates."""

import time
from pathlib import Path
from typing import Any, Dict

from src.config import settings
from src.dispersion.road_map import assemble_emissions, assemble_queue_sources, build_road_mesh_map
from src.dispersion.solver import solve_adjoint, solve_pollution
from src.errors import BUDGET_EXHAUSTED_EXIT, ConfigurationError
from src.exporters import (
    adjoint_cache_key,
    load_adjoint_cache,
    read_report,
    save_adjoint_cache,
    write_comparison,
    write_controls_table,
    write_field_vtk,
    write_history,
    write_json,
    write_trajectory,
)
from src.functionals import AdjointState, FunctionalReport, duality_gap, eval_JP_direct, eval_JT
from src.optimize.follower import solve_follower
from src.optimize.stackelberg import solve_stackelberg
from src.pipeline.state import PipelineState, add_artifacts, add_timing
from src.scenario import load_scenario, save_scenario
from src.traffic.simulator import simulate
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _threads(state: PipelineState) -> int:
    return int(state["flags"].get("threads") or settings.THREADS)


def _case(state: PipelineState) -> str:
    flags = state["flags"]
    if flags.get("case"):
        return flags["case"]
    return state["command"] + ("-relaxed" if flags.get("relaxed") else "")


def prepare_node(state: PipelineState) -> Dict[str, Any]:
    """
    Load the scenario, apply CLI overrides and build mesh, wind and grids.

    The effective scenario is written back as scenario.json next to the other artifacts.
    """
    logger.info(f"Preparing '{state['command']}' run in {state['out_dir']}")
    started = time.perf_counter()
    out_dir: Path = state["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    if state["command"] == "report":
        return {"timings": add_timing(state, "prepare", time.perf_counter() - started)}

    flags = state["flags"]
    scenario = load_scenario(state["scenario_path"]).with_overrides(
        seed=flags.get("seed"),
        relaxed=bool(flags.get("relaxed")),
        hybrid_follower=bool(flags.get("hybrid_follower")),
    )
    mesh = scenario.build_mesh()
    disc = scenario.build_discretization()
    written = save_scenario(scenario, out_dir / "scenario.json")
    logger.info(
        f"Grid: dt={disc.dt:.6g} h, N={disc.steps}, {sum(disc.cells.values())} cells, "
        f"mesh {mesh.n_vertices} vertices / {mesh.n_triangles} triangles"
    )
    return {
        "scenario": scenario,
        "net": scenario.network,
        "mesh": mesh,
        "wind": scenario.build_wind(mesh),
        "disc": disc,
        "weights": scenario.weights(),
        "controls": scenario.fixed_controls(),
        "artifacts": add_artifacts(state, [written]),
        "timings": add_timing(state, "prepare", time.perf_counter() - started),
    }


def adjoint_node(state: PipelineState) -> Dict[str, Any]:
    """Solve the adjoint once, or load it from the cache when the inputs match."""
    logger.info("Executing adjoint node")
    started = time.perf_counter()
    scenario, mesh, wind, disc = state["scenario"], state["mesh"], state["wind"], state["disc"]
    substeps = scenario.discretization.pollution_substeps

    key = adjoint_cache_key(mesh, wind, scenario.pollution, disc, substeps)
    cache_dir = Path(state["flags"].get("cache_dir") or settings.CACHE_DIR)
    cache_path = cache_dir / f"{key[:16]}_{settings.ADJOINT_CACHE_NAME}"

    g = load_adjoint_cache(key, cache_path) if state["flags"].get("use_cache", True) else None
    cached = g is not None
    if cached:
        logger.info(f"Adjoint loaded from cache {cache_path}")
    else:
        g = solve_adjoint(mesh, wind, scenario.pollution, disc, substeps=substeps)
        save_adjoint_cache(g, key, cache_path)

    road_map = build_road_mesh_map(state["net"], mesh, disc, wind)
    adjoint = AdjointState.from_field(g, road_map, mesh, scenario.pollution, disc, scenario.queue_term_dt)

    updates: Dict[str, Any] = {"adjoint": adjoint, "adjoint_cached": cached}
    if state["command"] == "adjoint":
        files = write_field_vtk(mesh, g, state["out_dir"] / "vtk")
        updates["artifacts"] = add_artifacts(state, files)
        updates["report"] = FunctionalReport(
            scenario=scenario.name,
            command="adjoint",
            case=_case(state),
            evaluations={"adjoint_solves": 0 if cached else 1},
        )
    updates["timings"] = add_timing(state, "adjoint", time.perf_counter() - started)
    return updates


def simulate_node(state: PipelineState) -> Dict[str, Any]:
    """Forward traffic and pollution for the fixed controls, with both J_P evaluations."""
    logger.info("Executing simulate node")
    started = time.perf_counter()
    scenario, net, mesh, disc = state["scenario"], state["net"], state["mesh"], state["disc"]
    adjoint: AdjointState = state["adjoint"]
    controls = state["controls"]

    traj = simulate(net, controls, disc)
    jt = eval_JT(traj, state["weights"], disc)
    jp = adjoint.jp(traj, net)

    phi = solve_pollution(
        mesh,
        state["wind"],
        scenario.pollution,
        assemble_emissions(traj, adjoint.road_map),
        disc,
        queue_sources=assemble_queue_sources(traj, adjoint.road_map, net),
        substeps=scenario.discretization.pollution_substeps,
    )
    jp_direct = eval_JP_direct(phi, mesh, disc)
    gap = duality_gap(jp, jp_direct)
    logger.info(f"JP adjoint {jp:.6e} direct {jp_direct:.6e} (relative gap {gap:.2e})")

    out_dir = state["out_dir"]
    files = write_trajectory(traj, net, out_dir)
    files.append(write_controls_table(controls, net, out_dir / "controls.csv"))
    files += write_field_vtk(mesh, phi, out_dir / "vtk")

    report = FunctionalReport(
        scenario=scenario.name,
        command="simulate",
        case=_case(state),
        JT=jt,
        JP=jp,
        JP_direct=jp_direct,
        duality_gap=gap,
        evaluations={"simulations": 1, "adjoint_solves": 0 if state["adjoint_cached"] else 1},
    )
    return {
        "trajectory": traj,
        "phi": phi,
        "report": report,
        "artifacts": add_artifacts(state, files),
        "timings": add_timing(state, "simulate", time.perf_counter() - started),
    }


def follower_node(state: PipelineState) -> Dict[str, Any]:
    """Best alpha for the scenario's fixed beta."""
    logger.info("Executing follower node")
    started = time.perf_counter()
    scenario, net, disc = state["scenario"], state["net"], state["disc"]

    result = solve_follower(
        state["controls"], net, disc, state["weights"], scenario.stackelberg.follower, threads=_threads(state)
    )
    jp = state["adjoint"].jp(result.trajectory, net)
    logger.info(f"Follower: JT {result.JT:.6e} JP {jp:.6e} after {result.simulations} simulations")

    out_dir = state["out_dir"]
    files = [write_controls_table(result.controls, net, out_dir / "alpha_table.csv")]
    files += write_trajectory(result.trajectory, net, out_dir)

    report = FunctionalReport(
        scenario=scenario.name,
        command="follower",
        case=_case(state),
        JT=result.JT,
        JP=jp,
        evaluations={"simulations": result.simulations, "starts_failed": result.starts_failed},
    )
    return {
        "follower_result": result,
        "trajectory": result.trajectory,
        "report": report,
        "artifacts": add_artifacts(state, files),
        "timings": add_timing(state, "follower", time.perf_counter() - started),
    }


def stackelberg_node(state: PipelineState) -> Dict[str, Any]:
    """Leader optimum over beta with the follower's alpha response."""
    logger.info("Executing stackelberg node")
    started = time.perf_counter()
    scenario, net, disc = state["scenario"], state["net"], state["disc"]
    lo, hi = scenario.beta_bounds

    result = solve_stackelberg(
        net,
        state["mesh"],
        state["wind"],
        disc,
        state["weights"],
        scenario.pollution,
        scenario.stackelberg,
        beta_lo=lo,
        beta_hi=hi,
        adjoint=state["adjoint"],
        threads=_threads(state),
    )
    result = result.model_copy(update={"adjoint_solves": 0 if state["adjoint_cached"] else 1})
    traj = simulate(net, result.controls, disc)

    out_dir = state["out_dir"]
    files = [
        write_json(result, out_dir / "result.json", exclude={"wall_time"}),
        write_controls_table(result.controls, net, out_dir / "alpha_table.csv"),
        write_history(result.history, result.mean_history, out_dir / "history.csv"),
    ]
    files += write_trajectory(traj, net, out_dir)

    report = FunctionalReport(
        scenario=scenario.name,
        command="stackelberg",
        case=_case(state),
        JT=result.JT,
        JP=result.JP,
        evaluations={
            "leader_evaluations": result.eval_count,
            "follower_solves": result.follower_solves,
            "memo_hits": result.memo_hits,
            "adjoint_solves": result.adjoint_solves,
            "generations": result.generations,
        },
        wall_time=result.wall_time,
    )
    return {
        "stackelberg_result": result,
        "trajectory": traj,
        "report": report,
        "exit_code": BUDGET_EXHAUSTED_EXIT if result.budget_exhausted else 0,
        "artifacts": add_artifacts(state, files),
        "timings": add_timing(state, "stackelberg", time.perf_counter() - started),
    }


def report_node(state: PipelineState) -> Dict[str, Any]:
    """Gather functionals.json from earlier run directories into comparison.csv."""
    logger.info("Executing report node")
    runs = [Path(r) for r in state["flags"].get("runs") or []]
    if not runs:
        raise ConfigurationError("report needs at least one run directory")
    reports = [read_report(run / "functionals.json") for run in runs]
    path = state["out_dir"] / "comparison.csv"
    frame = write_comparison(reports, path)
    logger.info(f"Compared {len(frame)} runs; lowest JP: {frame.iloc[0]['case']}")
    report = FunctionalReport(scenario="comparison", command="report", evaluations={"runs": len(frame)})
    return {"report": report, "artifacts": add_artifacts(state, [path])}


def export_node(state: PipelineState) -> Dict[str, Any]:
    """Write functionals.json and the run summary."""
    logger.info("Executing export node")
    out_dir = state["out_dir"]
    report: FunctionalReport = state["report"]
    files = [write_json(report, out_dir / "functionals.json", exclude={"wall_time"})]
    artifacts = add_artifacts(state, files)
    summary = {
        "command": state["command"],
        "case": report.case,
        "exit_code": state.get("exit_code", 0),
        "adjoint_cached": state.get("adjoint_cached"),
        "timings": state.get("timings", {}),
        "artifacts": sorted(Path(a).name for a in artifacts),
    }
    artifacts.append(str(write_json(summary, out_dir / "run_summary.json")))
    return {"artifacts": artifacts}
