"""Numerical fluxes: Godunov interfaces, junction coupling and boundary queues."""

from typing import Sequence, Tuple

import numpy as np

from src.errors import ConfigurationError
from src.network.model import FundamentalDiagram, Junction, Network


def godunov_flux(fd: FundamentalDiagram, rho_left: float, rho_right: float) -> float:
    """F(rho_L, rho_R) = min(D(rho_L), S(rho_R))."""
    return min(fd.demand(rho_left), fd.supply(rho_right))


def junction_fluxes(
    junction: Junction,
    end_densities: Sequence[float],
    start_densities: Sequence[float],
    alpha,
    beta,
    net: Network,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exit flows of the incoming roads and entry flows of the outgoing roads.

    Every pair (k, l) contributes min(alpha[l][k] * D_k, beta[k][l] * S_l); exits sum
    these over l, entries over k.

    Args:
        junction: Junction being coupled
        end_densities: Density of the last cell of each incoming road
        start_densities: Density of the first cell of each outgoing road
        alpha: |out| x |in| preference matrix
        beta: |in| x |out| capacity-share matrix
        net: Network providing each road's diagram

    Returns:
        (exit flow per incoming road, entry flow per outgoing road) in vehicles/h
    """
    n_in, n_out = len(junction.incoming), len(junction.outgoing)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if len(end_densities) != n_in or len(start_densities) != n_out:
        raise ConfigurationError(
            f"junction {junction.id}: expected {n_in} end and {n_out} start densities"
        )
    if alpha.shape != (n_out, n_in) or beta.shape != (n_in, n_out):
        raise ConfigurationError(
            f"junction {junction.id}: alpha {alpha.shape} / beta {beta.shape} do not match "
            f"arity ({n_in} in, {n_out} out)"
        )

    d_in = np.array(
        [net.road(k).fd.demand(rho) for k, rho in zip(junction.incoming, end_densities)]
    )
    s_out = np.array(
        [net.road(l).fd.supply(rho) for l, rho in zip(junction.outgoing, start_densities)]
    )
    terms = np.minimum(alpha * d_in[None, :], beta.T * s_out[:, None])
    return terms.sum(axis=0), terms.sum(axis=1)


def inflow_flux(
    q: float,
    f_in_now: float,
    cap_in: float,
    rho_start: float,
    dt: float,
    fd: FundamentalDiagram,
) -> Tuple[float, float]:
    """
    Flow admitted from a point queue into the first cell of its road.

    Returns:
        (flow, queue_demand) with queue_demand = min(f_in + q/dt, cap_in) and
        flow = min(queue_demand, S(rho_start))
    """
    if q < 0 or dt <= 0:
        raise ConfigurationError("queue must be nonnegative and dt positive")
    queue_demand = min(f_in_now + q / dt, cap_in)
    return min(queue_demand, fd.supply(rho_start)), queue_demand


def outflow_flux(rho_end: float, f_out_now: float, fd: FundamentalDiagram) -> float:
    """min(f_out, D(rho_end))."""
    return min(f_out_now, fd.demand(rho_end))


def exact_riemann(
    fd: FundamentalDiagram, rho_left: float, rho_right: float, x, t: float
) -> np.ndarray:
    """
    Entropy solution of a Greenshields Riemann problem, jump at x = 0, at time t > 0.

    Used as the reference for convergence checks of the cell scheme.
    """
    if fd.is_triangular:
        raise ConfigurationError("exact_riemann supports Greenshields diagrams only")
    x = np.asarray(x, dtype=float)
    v, rho_max = fd.v_free, fd.rho_max

    def speed(rho):
        return v * (1.0 - 2.0 * rho / rho_max)

    if rho_left <= rho_right:
        shock = v * (1.0 - (rho_left + rho_right) / rho_max)
        return np.where(x < shock * t, rho_left, rho_right)

    xi = x / t
    fan = 0.5 * rho_max * (1.0 - xi / v)
    return np.where(
        xi <= speed(rho_left), rho_left, np.where(xi >= speed(rho_right), rho_right, fan)
    )
