"""Real-coded elitist genetic algorithm over capped-simplex gene layouts."""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.optimize.encoding import SimplexGroups
from src.utils.logger import get_logger

logger = get_logger(__name__)

Objective = Callable[[np.ndarray], float]


class GAConfig(BaseModel):
    """Genetic algorithm settings."""

    model_config = ConfigDict(frozen=True)

    population_size: int = Field(default=50, ge=2)
    elite_count: int = Field(default=2, ge=1)
    crossover_fraction: float = Field(default=0.8, ge=0, le=1)
    mutation_scale: float = Field(default=0.1, gt=0, description="Gaussian sigma as a share of the gene range")
    mutation_shrink: float = Field(default=0.0, ge=0, le=1, description="Linear decay of sigma over generations")
    blend_alpha: float = Field(default=0.5, ge=0)
    tournament_size: int = Field(default=2, ge=1)
    stall_generations: int = Field(default=10, ge=1)
    tol: float = Field(default=1e-4, gt=0)
    max_generations: int = Field(default=100, ge=0)
    rng_seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def check_elites(self) -> "GAConfig":
        if self.elite_count >= self.population_size:
            raise ValueError("elite_count must be smaller than population_size")
        return self


class GAResult(BaseModel):
    """Best point found plus per-generation statistics."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: List[float] = Field(description="Best decoded (feasible) point")
    value: float
    history: List[float] = Field(description="Best fitness per generation, generation 0 included")
    mean_history: List[float]
    evaluations: int
    generations: int
    stop_reason: Literal["stall", "max_generations", "budget", "no_genes"]
    population: List[List[float]] = Field(default_factory=list, description="Final decoded population")
    fitness: List[float] = Field(default_factory=list)

    @property
    def budget_exhausted(self) -> bool:
        return self.stop_reason == "budget"


def safe_evaluate(objective: Objective, x: np.ndarray) -> float:
    try:
        value = float(objective(x))
    except Exception as e:
        logger.warning(f"Candidate rejected: {type(e).__name__}: {e}")
        return math.inf
    if not math.isfinite(value):
        logger.warning(f"Candidate rejected: non-finite fitness {value}")
        return math.inf
    return value


class _Evaluator:
    """Decodes and scores raw genes, in index order, optionally on a thread pool."""

    def __init__(self, objective: Objective, layout: SimplexGroups, threads: int):
        self.objective = objective
        self.layout = layout
        self.threads = threads
        self.count = 0

    def __call__(self, raw: np.ndarray) -> np.ndarray:
        decoded = [self.layout.decode_vector(r) for r in raw]
        self.count += len(decoded)
        if self.threads > 1 and len(decoded) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                values = list(pool.map(lambda x: safe_evaluate(self.objective, x), decoded))
        else:
            values = [safe_evaluate(self.objective, x) for x in decoded]
        return np.asarray(values, dtype=float)


def _tournament(rng: np.random.Generator, fitness: np.ndarray, size: int) -> int:
    contenders = rng.integers(0, len(fitness), size=size)
    return int(contenders[np.argmin(fitness[contenders])])


def _stalled(history: List[float], window: int, tol: float) -> bool:
    if len(history) <= window:
        return False
    old, new = history[-1 - window], history[-1]
    if not math.isfinite(old):
        return False
    return abs(old - new) / max(abs(old), np.finfo(float).tiny) < tol


def ga_minimize(
    objective: Objective,
    layout: SimplexGroups,
    cfg: GAConfig,
    threads: int = 1,
    initial: Optional[Sequence[np.ndarray]] = None,
    max_evaluations: Optional[int] = None,
) -> GAResult:
    """
    Minimize ``objective`` over the feasible set of ``layout``.

    Raw genes live in the box [layout.lower, layout.upper]; every individual is
    decoded before it is scored, so the objective only ever sees feasible points.
    Elites keep their fitness from the previous generation, so the best value per
    generation never increases.

    Args:
        objective: Called with decoded vectors; exceptions and non-finite values score +inf
        layout: Gene layout providing bounds and decode_vector
        cfg: GA settings
        threads: Concurrent fitness evaluations per generation
        initial: Optional individuals placed at the front of generation 0
        max_evaluations: Stop before a generation would exceed this many evaluations

    Returns:
        GAResult with the best decoded point and per-generation history
    """
    rng = np.random.default_rng(cfg.rng_seed)
    evaluate = _Evaluator(objective, layout, threads)
    lower, upper = layout.lower, layout.upper
    span = upper - lower

    if layout.n_genes == 0:
        x = layout.decode_vector(np.empty(0))
        value = float(evaluate(x[None, :])[0])
        return GAResult(
            x=x.tolist(), value=value, history=[value], mean_history=[value],
            evaluations=1, generations=0, stop_reason="no_genes",
        )

    size = cfg.population_size
    if max_evaluations is not None and max_evaluations < size:
        logger.warning(f"Evaluation budget {max_evaluations} is below one population; scoring {size} anyway")
    population = lower + span * rng.random((size, layout.n_genes))
    for i, x in enumerate(list(initial or [])[:size]):
        population[i] = np.clip(np.asarray(x, dtype=float), lower, upper)
    fitness = evaluate(population)

    started = time.perf_counter()
    history: List[float] = []
    mean_history: List[float] = []
    generation = 0
    stop_reason = "max_generations"
    n_children = size - cfg.elite_count
    n_cross = int(round(cfg.crossover_fraction * n_children))

    while True:
        finite = fitness[np.isfinite(fitness)]
        history.append(float(fitness.min()))
        mean_history.append(float(finite.mean()) if finite.size else math.inf)
        logger.info(
            f"gen {generation} best {history[-1]:.6e} mean {mean_history[-1]:.6e} "
            f"evals {evaluate.count} elapsed {time.perf_counter() - started:.1f}s"
        )
        if _stalled(history, cfg.stall_generations, cfg.tol):
            stop_reason = "stall"
            break
        if generation >= cfg.max_generations:
            stop_reason = "max_generations"
            break
        if max_evaluations is not None and evaluate.count + n_children > max_evaluations:
            stop_reason = "budget"
            logger.warning(f"Evaluation budget exhausted after {evaluate.count} evaluations")
            break

        order = np.argsort(fitness, kind="stable")
        elites = population[order[: cfg.elite_count]]
        elite_fitness = fitness[order[: cfg.elite_count]]

        sigma = cfg.mutation_scale * span * max(
            0.0, 1.0 - cfg.mutation_shrink * generation / max(cfg.max_generations, 1)
        )
        children = np.empty((n_children, layout.n_genes))
        for c in range(n_children):
            if c < n_cross:
                a = population[_tournament(rng, fitness, cfg.tournament_size)]
                b = population[_tournament(rng, fitness, cfg.tournament_size)]
                low, high = np.minimum(a, b), np.maximum(a, b)
                reach = cfg.blend_alpha * (high - low)
                child = rng.uniform(low - reach, high + reach)
            else:
                parent = population[_tournament(rng, fitness, cfg.tournament_size)]
                child = parent + sigma * rng.standard_normal(layout.n_genes)
            children[c] = np.clip(child, lower, upper)

        population = np.vstack([elites, children])
        fitness = np.concatenate([elite_fitness, evaluate(children)])
        generation += 1

    best = int(np.argmin(fitness))
    decoded = [layout.decode_vector(r) for r in population]
    logger.info(
        f"GA stopped ({stop_reason}) after {generation} generations, "
        f"{evaluate.count} evaluations, best {fitness[best]:.6e}"
    )
    return GAResult(
        x=decoded[best].tolist(),
        value=float(fitness[best]),
        history=history,
        mean_history=mean_history,
        evaluations=evaluate.count,
        generations=generation,
        stop_reason=stop_reason,
        population=[d.tolist() for d in decoded],
        fitness=fitness.tolist(),
    )


def pick_start(result: GAResult, rule: Literal["mean", "best"] = "mean") -> np.ndarray:
    """
    Hand-off point for the local stage.

    "mean" picks the final individual whose fitness is closest to the population's
    mean finite fitness (lowest index on ties); "best" picks the best individual.
    """
    if rule == "best" or not result.population:
        return np.asarray(result.x)
    fitness = np.asarray(result.fitness)
    finite = np.isfinite(fitness)
    if not finite.any():
        return np.asarray(result.x)
    distance = np.where(finite, np.abs(fitness - fitness[finite].mean()), np.inf)
    return np.asarray(result.population[int(np.argmin(distance))])
