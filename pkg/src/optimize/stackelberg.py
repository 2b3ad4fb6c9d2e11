"""Leader problem over beta, with the follower solved inside every evaluation."""

import math
import threading
import time
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.dispersion.mesh import TriMesh
from src.dispersion.solver import PollutionParams
from src.dispersion.wind import WindField
from src.functionals import AdjointState, FunctionalWeights
from src.network.model import ControlSet, Network
from src.optimize.encoding import ControlEncoder
from src.optimize.follower import FollowerConfig, FollowerResult, solve_follower
from src.optimize.genetic import GAConfig, GAResult, ga_minimize, pick_start, safe_evaluate
from src.optimize.local_search import LocalSearchConfig, local_minimize
from src.traffic.layout import Discretization
from src.traffic.simulator import TrafficModel
from src.utils.logger import get_logger

logger = get_logger(__name__)


class StackelbergConfig(BaseModel):
    """Leader search settings."""

    model_config = ConfigDict(frozen=True)

    ga: GAConfig = Field(default_factory=GAConfig)
    local_search: LocalSearchConfig = Field(default_factory=lambda: LocalSearchConfig(kkt_tol=1e-10, max_iters=50))
    follower: FollowerConfig = Field(default_factory=FollowerConfig)
    start_rule: Literal["mean", "best"] = Field(default="mean", description="GA individual handed to the local stage")
    local_stage: bool = Field(default=True)
    memo_digits: int = Field(default=6, ge=1, le=15, description="beta is rounded to this many decimals for the follower cache")
    max_evaluations: Optional[int] = Field(default=None, ge=1, description="Leader evaluation budget")


class StackelbergResult(BaseModel):
    """Leader optimum (beta*, alpha*) and how it was reached."""

    alpha_star: Dict[int, List[List[float]]]
    beta_star: Dict[int, List[List[float]]]
    beta_lo: float
    beta_hi: float
    JT: float
    JP: float
    history: List[float] = Field(description="GA best J_P per generation")
    mean_history: List[float] = Field(default_factory=list)
    local_trajectory: List[float] = Field(default_factory=list, description="Accepted J_P values of the local stage")
    eval_count: int = Field(description="Leader evaluations (memo hits included)")
    follower_solves: int
    adjoint_solves: int
    memo_hits: int
    generations: int
    source: Literal["ga", "local", "forced"]
    budget_exhausted: bool = False
    wall_time: Optional[float] = Field(default=None, description="Seconds; excluded from result.json")

    @property
    def controls(self) -> ControlSet:
        return ControlSet(alpha=self.alpha_star, beta=self.beta_star, beta_lo=self.beta_lo, beta_hi=self.beta_hi)


class LeaderObjective:
    """
    beta vector -> J_P(alpha_beta, beta), solving the follower once per distinct beta.

    Safe to call from several threads: the first caller of a key solves, later
    callers wait for it, so follower and hit counts do not depend on scheduling.
    """

    def __init__(
        self,
        net: Network,
        disc: Discretization,
        weights: FunctionalWeights,
        adjoint: AdjointState,
        encoder: ControlEncoder,
        follower_cfg: FollowerConfig,
        memo_digits: int,
        beta_lo: float = 0.0,
        beta_hi: float = 1.0,
    ):
        self.net = net
        self.disc = disc
        self.weights = weights
        self.adjoint = adjoint
        self.encoder = encoder
        self.follower_cfg = follower_cfg
        self.memo_digits = memo_digits
        self.beta_lo = beta_lo
        self.beta_hi = beta_hi
        self.model = TrafficModel(net, disc)
        self.memo: Dict[Tuple[float, ...], Tuple[FollowerResult, float]] = {}
        self._pending: Dict[Tuple[float, ...], threading.Event] = {}
        self._lock = threading.Lock()
        self.calls = 0
        self.follower_solves = 0
        self.memo_hits = 0

    def key(self, x: np.ndarray) -> Tuple[float, ...]:
        return tuple(np.round(x, self.memo_digits).tolist())

    def controls(self, x: np.ndarray) -> ControlSet:
        """Leader half of the controls for a feasible beta vector."""
        return ControlSet(beta=self.encoder.to_table(x), beta_lo=self.beta_lo, beta_hi=self.beta_hi)

    def solve(self, x: np.ndarray) -> Tuple[FollowerResult, float]:
        """Follower response and J_P at beta vector x (memoized)."""
        x = self.encoder.decode_vector(x)
        violation = self.encoder.violation(x)
        assert violation is None, violation
        k = self.key(x)
        with self._lock:
            self.calls += 1
            if k in self.memo:
                self.memo_hits += 1
                return self.memo[k]
            event = self._pending.get(k)
            owner = event is None
            if owner:
                event = self._pending[k] = threading.Event()
        if not owner:
            event.wait()
            with self._lock:
                self.memo_hits += 1
                if k in self.memo:
                    return self.memo[k]
            raise RuntimeError(f"follower solve for beta {k} failed in another thread")

        try:
            response = solve_follower(
                self.controls(x), self.net, self.disc, self.weights, self.follower_cfg, model=self.model
            )
            jp = self.adjoint.jp(response.trajectory, self.net)
            with self._lock:
                self.follower_solves += 1
                self.memo[k] = (response, jp)
        finally:
            with self._lock:
                self._pending.pop(k, None)
            event.set()
        return response, jp

    def __call__(self, x: np.ndarray) -> float:
        return self.solve(x)[1]


def solve_stackelberg(
    net: Network,
    mesh: TriMesh,
    wind: WindField,
    disc: Discretization,
    weights: FunctionalWeights,
    params: PollutionParams,
    cfg: StackelbergConfig,
    beta_lo: float = 0.0,
    beta_hi: float = 1.0,
    adjoint: Optional[AdjointState] = None,
    threads: int = 1,
) -> StackelbergResult:
    """
    GA over beta, then local search from the GA hand-off point.

    The adjoint is solved once here unless a precomputed one is passed in. Every
    leader evaluation solves the follower for alpha_beta and scores J_P through
    the adjoint. The better of the GA best and the local-stage result is returned.

    Args:
        net: Network
        mesh: Triangulation
        wind: Wind field
        disc: Discretization shared by traffic and pollution
        weights: Travel-cost weights for the follower
        params: Pollution parameters
        cfg: GA, local-search and follower settings
        beta_lo: Lower bound on free beta entries
        beta_hi: Upper bound on free beta entries
        adjoint: Precomputed adjoint state (for example from the cache)
        threads: Concurrent leader evaluations per GA generation

    Returns:
        StackelbergResult
    """
    started = time.perf_counter()
    encoder = ControlEncoder(net, "beta", beta_lo, beta_hi)

    adjoint_solves = 0
    if adjoint is None:
        adjoint = AdjointState.compute(net, mesh, wind, params, disc)
        adjoint_solves = 1
    else:
        logger.info("Using the precomputed adjoint state")

    leader = LeaderObjective(
        net, disc, weights, adjoint, encoder, cfg.follower, cfg.memo_digits, beta_lo, beta_hi
    )

    ga: GAResult = ga_minimize(
        leader, encoder, cfg.ga, threads=threads, initial=[encoder.uniform()],
        max_evaluations=cfg.max_evaluations,
    )
    best_x, best_value, source = np.asarray(ga.x), ga.value, "ga"
    if encoder.n_genes == 0:
        source = "forced"

    local_values: List[float] = []
    run_local = cfg.local_stage and encoder.n_genes > 0 and not ga.budget_exhausted
    if run_local:
        start = pick_start(ga, cfg.start_rule)
        logger.info(f"Local stage from the '{cfg.start_rule}' individual")
        local = local_minimize(lambda x: safe_evaluate(leader, x), start, encoder, cfg.local_search)
        local_values = local.values
        if local.value < best_value:
            best_x, best_value, source = np.asarray(local.x), local.value, "local"

    response, jp = leader.solve(best_x)
    result = StackelbergResult(
        alpha_star=response.controls.alpha,
        beta_star=response.controls.beta,
        beta_lo=beta_lo,
        beta_hi=beta_hi,
        JT=response.JT,
        JP=jp,
        history=ga.history,
        mean_history=ga.mean_history,
        local_trajectory=local_values,
        eval_count=leader.calls,
        follower_solves=leader.follower_solves,
        adjoint_solves=adjoint_solves,
        memo_hits=leader.memo_hits,
        generations=ga.generations,
        source=source,
        budget_exhausted=ga.budget_exhausted,
        wall_time=time.perf_counter() - started,
    )
    if result.budget_exhausted:
        logger.warning("Returning the best leader found before the evaluation budget ran out")
    logger.info(
        f"Stackelberg done: JP {result.JP:.6e} JT {result.JT:.6e} from {source}, "
        f"{result.follower_solves} follower solves, {result.memo_hits} memo hits"
    )
    if not math.isfinite(result.JP):
        logger.error("Leader optimum has a non-finite J_P")
    return result
