"""State schema for the run pipeline graph."""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, TypedDict

Command = Literal["simulate", "adjoint", "follower", "stackelberg", "report"]

COMMANDS = ("simulate", "adjoint", "follower", "stackelberg", "report")


class PipelineState(TypedDict, total=False):
    """
    State carried through one CLI run.

    Attributes:
        command: Subcommand being executed
        scenario_path: Scenario file (absent for report)
        out_dir: Directory receiving the run's artifacts
        flags: CLI overrides (seed, threads, relaxed, hybrid_follower, case, runs, use_cache)

        scenario: Loaded and overridden Scenario
        net: Network of the scenario
        mesh: TriMesh
        wind: WindField
        disc: Shared traffic/pollution Discretization
        weights: FunctionalWeights for J_T
        controls: Fixed controls for simulate/follower

        adjoint: AdjointState (solved or loaded from the cache)
        adjoint_cached: Whether the adjoint came from the cache
        trajectory: Traffic trajectory of the final controls
        phi: Concentration series (simulate only)
        follower_result: FollowerResult
        stackelberg_result: StackelbergResult
        report: FunctionalReport of this run

        artifacts: Files written so far
        timings: Wall-clock seconds per node
        exit_code: Process exit code decided by the pipeline
    """

    # request
    command: Command
    scenario_path: Optional[Path]
    out_dir: Path
    flags: Dict[str, Any]

    # problem data
    scenario: Any
    net: Any
    mesh: Any
    wind: Any
    disc: Any
    weights: Any
    controls: Any

    # solutions
    adjoint: Any
    adjoint_cached: bool
    trajectory: Any
    phi: Any
    follower_result: Any
    stackelberg_result: Any
    report: Any

    # bookkeeping
    artifacts: List[str]
    timings: Dict[str, float]
    exit_code: int


def create_initial_state(
    command: Command,
    out_dir: Path,
    scenario_path: Optional[Path] = None,
    flags: Optional[Dict[str, Any]] = None,
) -> PipelineState:
    """
    Create the initial state for a run.

    Args:
        command: Subcommand
        out_dir: Artifact directory
        scenario_path: Scenario file (None for report)
        flags: CLI overrides

    Returns:
        Initial PipelineState

    Example:
        >>> state = create_initial_state("simulate", Path("runs/x"), Path("s.json"))
        >>> state["exit_code"]
        0
    """
    return PipelineState(
        command=command,
        scenario_path=scenario_path,
        out_dir=out_dir,
        flags=dict(flags or {}),
        artifacts=[],
        timings={},
        exit_code=0,
    )


def needs_adjoint(state: PipelineState) -> bool:
    """Every scenario command scores J_P through the adjoint; only report does not."""
    return state.get("command") != "report"


def add_artifacts(state: PipelineState, paths) -> List[str]:
    """Artifact list extended with ``paths`` (as strings)."""
    return list(state.get("artifacts", [])) + [str(p) for p in paths]


def add_timing(state: PipelineState, node: str, seconds: float) -> Dict[str, float]:
    timings = dict(state.get("timings", {}))
    timings[node] = timings.get(node, 0.0) + seconds
    return timings
