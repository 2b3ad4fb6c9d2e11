"""Follower problem: best route preferences alpha for a fixed leader beta."""

import math
import threading
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import StackelbergError
from src.functionals import FunctionalWeights, eval_JT
from src.network.model import ControlSet, Network
from src.optimize.encoding import ControlEncoder
from src.optimize.genetic import GAConfig, ga_minimize, pick_start
from src.optimize.local_search import LocalSearchConfig, local_minimize
from src.traffic.layout import Discretization
from src.traffic.simulator import TrafficModel, TrafficTrajectory
from src.utils.logger import get_logger

logger = get_logger(__name__)


class FollowerConfig(BaseModel):
    """Multi-start local search for the follower, optionally seeded by a GA."""

    model_config = ConfigDict(frozen=True)

    starts: int = Field(default=5, ge=1, description="Local-search starts (uniform split plus random interior points)")
    seed: int = Field(default=0, ge=0)
    local_search: LocalSearchConfig = Field(default_factory=LocalSearchConfig)
    hybrid: bool = Field(default=False, description="Run a GA over alpha before the local stage")
    start_rule: Literal["mean", "best"] = Field(default="mean", description="GA individual handed to the local stage")
    ga: GAConfig = Field(
        default_factory=lambda: GAConfig(population_size=20, elite_count=2, max_generations=20)
    )


class FollowerResult(BaseModel):
    """alpha_beta with its travel cost and the trajectory it produces."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    controls: ControlSet
    JT: float
    simulations: int
    starts_failed: int = 0
    trajectory: Optional[TrafficTrajectory] = Field(default=None, exclude=True)

    @property
    def alpha(self) -> Dict[int, List[List[float]]]:
        return self.controls.alpha


def start_points(encoder: ControlEncoder, count: int, seed: int, interior_eps: float) -> List[np.ndarray]:
    """Uniform split first, then Dirichlet draws blended toward it so each is interior."""
    rng = np.random.default_rng(seed)
    uniform = encoder.uniform()
    points = [uniform]
    for _ in range(count - 1):
        x = np.empty(encoder.n_genes)
        for g in encoder.groups:
            x[g.span] = rng.dirichlet(np.ones(g.size))
        x = encoder.decode_vector(x)
        points.append((1.0 - interior_eps) * x + interior_eps * uniform)
    return points


def solve_follower(
    beta: ControlSet,
    net: Network,
    disc: Discretization,
    weights: FunctionalWeights,
    cfg: FollowerConfig,
    model: Optional[TrafficModel] = None,
    threads: int = 1,
) -> FollowerResult:
    """
    Minimize J_T over feasible alpha with beta held fixed.

    Args:
        beta: Control set whose beta (and bounds) the leader fixed; its alpha is ignored
        net: Network
        disc: Discretization
        weights: Travel-cost weights
        cfg: Follower settings
        model: Compiled TrafficModel to reuse across calls
        threads: Threads for the hybrid GA

    Returns:
        FollowerResult with the best alpha over all starts

    Raises:
        StackelbergError: every start failed (the last failure is re-raised)
    """
    model = model or TrafficModel(net, disc)
    encoder = ControlEncoder(net, "alpha")
    simulations = 0
    lock = threading.Lock()

    def controls_for(x: np.ndarray) -> ControlSet:
        return beta.with_alpha(encoder.to_table(encoder.decode_vector(x)))

    def cost(x: np.ndarray) -> float:
        nonlocal simulations
        with lock:
            simulations += 1
        return eval_JT(model.run(controls_for(x)), weights, disc)

    if encoder.n_genes == 0:
        controls = controls_for(np.empty(0))
        traj = model.run(controls)
        return FollowerResult(controls=controls, JT=eval_JT(traj, weights, disc), simulations=1, trajectory=traj)

    starts = start_points(encoder, cfg.starts, cfg.seed, cfg.local_search.interior_eps)
    if cfg.hybrid:
        ga = ga_minimize(cost, encoder, cfg.ga, threads=threads, initial=[starts[0]])
        starts = [pick_start(ga, cfg.start_rule)] + starts[1:]

    best_x, best_value, failed = None, math.inf, 0
    last_error: Optional[StackelbergError] = None
    for i, x0 in enumerate(starts):
        try:
            found = local_minimize(cost, x0, encoder, cfg.local_search)
        except StackelbergError as e:
            failed += 1
            last_error = e
            logger.warning(f"Follower start {i} discarded: {e.message}")
            continue
        if found.value < best_value:
            best_x, best_value = np.asarray(found.x), found.value

    if cfg.hybrid and ga.value < best_value:
        best_x, best_value = np.asarray(ga.x), ga.value
    if best_x is None:
        raise last_error

    controls = controls_for(best_x)
    traj = model.run(controls)
    simulations += 1
    jt = eval_JT(traj, weights, disc)
    logger.debug(f"Follower solved: JT {jt:.6e} after {simulations} simulations ({failed} starts failed)")
    return FollowerResult(
        controls=controls, JT=jt, simulations=simulations, starts_failed=failed, trajectory=traj
    )
