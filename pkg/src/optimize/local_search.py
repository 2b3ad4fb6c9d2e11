"""Log-barrier local search on capped simplices with finite-difference gradients."""

import math
from typing import Callable, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import ConfigurationError
from src.optimize.encoding import SimplexGroups
from src.utils.logger import get_logger

logger = get_logger(__name__)

FEASIBILITY_TOL = 1e-9
FRACTION_TO_BOUNDARY = 0.995
_MAX_BACKTRACKS = 40


class LocalSearchConfig(BaseModel):
    """Interior local search settings."""

    model_config = ConfigDict(frozen=True)

    fd_step: float = Field(default=1e-4, gt=0, le=1e-2, description="Relative central-difference step")
    barrier_init: float = Field(default=1e-2, gt=0)
    barrier_shrink: float = Field(default=0.2, gt=0, lt=1)
    max_iters: int = Field(default=200, ge=0)
    kkt_tol: float = Field(default=1e-6, gt=0)
    armijo: float = Field(default=1e-4, gt=0, lt=1)
    interior_eps: float = Field(default=1e-3, gt=0, lt=1, description="Blend weight toward the uniform point")


class LocalResult(BaseModel):
    x: List[float]
    value: float
    iterations: int
    evaluations: int
    kkt_residual: float
    values: List[float] = Field(description="Accepted objective values, start included")
    converged: bool


def central_difference_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, step: Union[float, np.ndarray]
) -> np.ndarray:
    """(f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate."""
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(np.asarray(step, dtype=float), x.shape)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return grad


class _Counted:
    def __init__(self, f: Callable[[np.ndarray], float], scale: float):
        self.f = f
        self.scale = scale
        self.count = 0

    def __call__(self, x: np.ndarray) -> float:
        self.count += 1
        return float(self.f(x)) / self.scale


def local_minimize(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    layout: SimplexGroups,
    cfg: LocalSearchConfig,
) -> LocalResult:
    """
    Minimize ``objective`` subject to the group sum and bound constraints of ``layout``.

    Each iteration takes a scaled projected-gradient step on the barrier problem
    f(x)/|f(x0)| + mu * sum(-log(x - lo) - log(hi - x)); the scaling keeps the
    step inside each group's affine hull, a fraction-to-boundary rule keeps it
    interior, and Armijo backtracking accepts it. mu shrinks once the inner step
    is small or the line search fails. Stops when mu is below kkt_tol/100 and the
    projected-gradient residual is below kkt_tol, or after max_iters.

    Raises:
        ConfigurationError: x0 violates a constraint (the message names it)
    """
    x0 = np.asarray(x0, dtype=float)
    problem = layout.violation(x0, FEASIBILITY_TOL)
    if problem is not None:
        raise ConfigurationError(f"infeasible start: {problem}")

    f0 = float(objective(x0))
    if not math.isfinite(f0):
        raise ConfigurationError("objective is not finite at the start point")
    f = _Counted(objective, max(abs(f0), 1e-12))
    f.count = 1

    lower, upper = layout.lower, layout.upper
    free = np.ones(layout.n_genes, dtype=bool)
    for g in layout.groups:
        if g.fixed:
            free[g.span] = False
    uniform = layout.uniform()

    x = x0.copy()
    on_boundary = free & ((x - lower <= FEASIBILITY_TOL) | (upper - x <= FEASIBILITY_TOL))
    if on_boundary.any():
        x = (1.0 - cfg.interior_eps) * x + cfg.interior_eps * uniform
    x[~free] = uniform[~free]

    best_x, best_val = x0.copy(), f0 / f.scale
    fx = f(x) if not np.array_equal(x, x0) else best_val
    if fx < best_val:
        best_x, best_val = x.copy(), fx
    values = [best_val * f.scale]

    if not free.any():
        return LocalResult(
            x=best_x.tolist(), value=best_val * f.scale, iterations=0, evaluations=f.count,
            kkt_residual=0.0, values=values, converged=True,
        )

    def barrier(z: np.ndarray) -> float:
        zf = z[free]
        return float(-np.sum(np.log(zf - lower[free]) + np.log(upper[free] - zf)))

    mu = cfg.barrier_init
    step = 0.5
    residual = math.inf
    iteration = 0
    converged = False
    while iteration < cfg.max_iters:
        iteration += 1
        gap_lo = x - lower
        gap_hi = upper - x
        h = np.where(free, np.minimum(cfg.fd_step * np.maximum(1.0, np.abs(x)), 0.5 * np.minimum(gap_lo, gap_hi)), 0.0)
        grad = np.zeros_like(x)
        grad_free = central_difference_gradient(lambda z: f(_embed(x, free, z)), x[free], h[free])
        grad[free] = grad_free

        residual = float(np.max(np.abs(x - layout.project(x - grad))))
        if mu <= cfg.kkt_tol * 1e-2 and residual <= cfg.kkt_tol:
            converged = True
            break

        gb = grad + mu * (-1.0 / gap_lo + 1.0 / gap_hi)
        scaling = 1.0 / (1.0 + mu * (1.0 / gap_lo**2 + 1.0 / gap_hi**2))
        direction = np.zeros_like(x)
        for g in layout.groups:
            if g.fixed:
                continue
            s, d = g.span, scaling[g.span]
            lam = float(d @ gb[s]) / float(d.sum())
            direction[s] = -d * (gb[s] - lam)

        slope = float(gb @ direction)
        inner = float(np.max(np.abs(direction)))
        if inner == 0.0 or slope >= 0.0:
            mu *= cfg.barrier_shrink
            continue

        with np.errstate(divide="ignore"):
            limits = np.where(direction < 0, gap_lo / -direction, np.where(direction > 0, gap_hi / direction, np.inf))
        t = min(FRACTION_TO_BOUNDARY * float(limits.min()), 2.0 * step)
        merit = fx + mu * barrier(x)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            trial = x + t * direction
            ft = f(trial)
            if math.isfinite(ft) and ft + mu * barrier(trial) <= merit + cfg.armijo * t * slope:
                accepted = True
                break
            t *= 0.5

        if accepted:
            x, fx, step = trial, ft, t
            values.append(fx * f.scale)
            if fx < best_val and layout.is_feasible(x):
                best_x, best_val = x.copy(), fx
        logger.debug(
            f"local iter {iteration} f {fx * f.scale:.6e} mu {mu:.1e} step {t:.2e} "
            f"kkt {residual:.2e} {'ok' if accepted else 'backtrack failed'}"
        )
        if not accepted or inner <= 10.0 * mu:
            mu *= cfg.barrier_shrink
        if mu < 1e-300:
            break

    return LocalResult(
        x=best_x.tolist(),
        value=best_val * f.scale,
        iterations=iteration,
        evaluations=f.count,
        kkt_residual=residual,
        values=values,
        converged=converged,
    )


def _embed(x: np.ndarray, mask: np.ndarray, sub: np.ndarray) -> np.ndarray:
    z = x.copy()
    z[mask] = sub
    return z
