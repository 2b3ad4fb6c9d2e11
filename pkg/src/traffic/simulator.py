"""First-order Godunov scheme for the LWR network with junctions and entry queues."""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from src.errors import ConfigurationError
from src.network.model import (
    ControlSet,
    Network,
    diagram_demand,
    diagram_flux,
    diagram_supply,
)
from src.network.validation import check_controls
from src.traffic.layout import Discretization, NetworkLayout
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class TrafficState:
    """Cell densities (flat, in layout order), entry queues and time."""

    rho: np.ndarray
    q: np.ndarray
    t: float
    layout: NetworkLayout

    def road_density(self, road_id: int) -> np.ndarray:
        return self.rho[self.layout.road_slice(road_id)]

    @property
    def by_road(self) -> Dict[int, np.ndarray]:
        return {rid: self.road_density(rid) for rid in self.layout.road_ids}

    def total_cars(self) -> float:
        return float(self.rho @ self.layout.ds)


@dataclass
class BoundaryFluxes:
    """Boundary flows evaluated on one state (vehicles/h)."""

    desired_inflow: np.ndarray
    inflow: np.ndarray
    outflow: np.ndarray


@dataclass
class TrafficTrajectory:
    """
    States at t^0..t^N plus boundary flows evaluated on each of them.

    Row n of the flux arrays is computed from state n; it is the flow used to
    advance from t^n to t^{n+1} (row N is the post-horizon flux, kept for J_T).
    """

    layout: NetworkLayout
    times: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    desired_inflow: np.ndarray
    inflow_flux: np.ndarray
    outflow_flux: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dt(self) -> float:
        return self.layout.dt

    def state(self, n: int) -> TrafficState:
        return TrafficState(rho=self.rho[n], q=self.q[n], t=float(self.times[n]), layout=self.layout)

    @property
    def states(self) -> Iterator[TrafficState]:
        return (self.state(n) for n in range(len(self.times)))

    def road_density(self, road_id: int) -> np.ndarray:
        """(N+1, M_i) densities of one road."""
        return self.rho[:, self.layout.road_slice(road_id)]

    def total_cars(self) -> np.ndarray:
        return self.rho @ self.layout.ds

    def total_queued(self) -> np.ndarray:
        return self.q.sum(axis=1)

    def cell_flux(self) -> np.ndarray:
        """f_i(rho^n_{i,h}) for every state and cell."""
        return diagram_flux(self.rho, *self.layout.diagram())


BoundControls = List[Tuple[np.ndarray, np.ndarray]]


class TrafficModel:
    """
    Compiled network plus time grid; simulates any number of control sets.

    The layout is built once so optimizers can call ``run`` repeatedly.
    """

    def __init__(self, net: Network, disc: Discretization):
        disc.check_cfl(net)
        self.net = net
        self.disc = disc
        self.layout = NetworkLayout.compile(net, disc)

    def bind(self, controls: ControlSet) -> BoundControls:
        """
        alpha and beta matrices for each junction in layout order.

        Raises:
            ConfigurationError: controls of the wrong shape, not stochastic or outside the beta bounds
        """
        violations = check_controls(self.net, controls)
        if violations:
            raise ConfigurationError(
                "infeasible controls: " + "; ".join(str(v) for v in violations),
                violations=[v.code for v in violations],
            )
        bound = []
        for ports in self.layout.junctions:
            j = ports.junction
            alpha = controls.alpha_matrix(j)
            beta = controls.beta_matrix(j)
            if np.any(~np.isfinite(alpha)) or np.any(~np.isfinite(beta)):
                raise ConfigurationError(f"non-finite controls at junction {j.id}")
            bound.append((alpha, beta))
        return bound

    def initial_state(self) -> TrafficState:
        return TrafficState(
            rho=self.layout.rho0.copy(), q=self.layout.inflow_q0.copy(), t=0.0, layout=self.layout
        )

    def fluxes(
        self, rho: np.ndarray, q: np.ndarray, t: float, bound: BoundControls
    ) -> Tuple[np.ndarray, np.ndarray, BoundaryFluxes]:
        """Left and right face flows of every cell, plus the boundary record."""
        lay = self.layout
        params = lay.diagram()
        dem = diagram_demand(rho, *params)
        sup = diagram_supply(rho, *params)

        left_face = np.zeros(lay.n_cells)
        right_face = np.zeros(lay.n_cells)

        interior = np.minimum(dem[lay.interior_left], sup[lay.interior_right])
        right_face[lay.interior_left] = interior
        left_face[lay.interior_right] = interior

        for ports, (alpha, beta) in zip(lay.junctions, bound):
            terms = np.minimum(
                alpha * dem[ports.in_cells][None, :], beta.T * sup[ports.out_cells][:, None]
            )
            right_face[ports.in_cells] = terms.sum(axis=0)
            left_face[ports.out_cells] = terms.sum(axis=1)

        desired = np.array([s(t) for s in lay.inflow_series], dtype=float)
        queue_demand = np.minimum(desired + q / lay.dt, lay.inflow_cap)
        inflow = np.minimum(queue_demand, sup[lay.inflow_cells])
        left_face[lay.inflow_cells] = inflow

        f_out = np.array([s(t) for s in lay.outflow_series], dtype=float)
        outflow = np.minimum(f_out, dem[lay.outflow_cells])
        right_face[lay.outflow_cells] = outflow

        return left_face, right_face, BoundaryFluxes(desired, inflow, outflow)

    def advance(
        self, rho: np.ndarray, q: np.ndarray, t: float, bound: BoundControls
    ) -> Tuple[np.ndarray, np.ndarray, BoundaryFluxes]:
        """One explicit conservative update from t to t + dt."""
        lay = self.layout
        left_face, right_face, record = self.fluxes(rho, q, t, bound)
        rho_next = rho - (lay.dt / lay.ds) * (right_face - left_face)
        # monotone under CFL; the clip only removes round-off
        np.clip(rho_next, 0.0, lay.rho_max, out=rho_next)
        q_next = np.maximum(0.0, q + lay.dt * (record.desired_inflow - record.inflow))
        return rho_next, q_next, record

    def step(self, state: TrafficState, controls: ControlSet) -> TrafficState:
        rho, q, _ = self.advance(state.rho, state.q, state.t, self.bind(controls))
        return TrafficState(rho=rho, q=q, t=state.t + self.layout.dt, layout=self.layout)

    def run(self, controls: ControlSet) -> TrafficTrajectory:
        """Simulate n = 0..N and record every state and boundary flow."""
        lay = self.layout
        bound = self.bind(controls)
        n_steps = lay.steps
        times = lay.dt * np.arange(n_steps + 1)

        rho_hist = np.empty((n_steps + 1, lay.n_cells))
        q_hist = np.empty((n_steps + 1, len(lay.inflow_roads)))
        desired = np.empty_like(q_hist)
        admitted = np.empty_like(q_hist)
        outflow = np.empty((n_steps + 1, len(lay.outflow_roads)))

        rho = lay.rho0.copy()
        q = lay.inflow_q0.copy()
        for n in range(n_steps + 1):
            rho_hist[n] = rho
            q_hist[n] = q
            if n < n_steps:
                rho, q, record = self.advance(rho, q, times[n], bound)
            else:
                _, _, record = self.fluxes(rho, q, times[n], bound)
            desired[n] = record.desired_inflow
            admitted[n] = record.inflow
            outflow[n] = record.outflow

        return TrafficTrajectory(
            layout=lay,
            times=times,
            rho=rho_hist,
            q=q_hist,
            desired_inflow=desired,
            inflow_flux=admitted,
            outflow_flux=outflow,
        )


def step(state: TrafficState, net: Network, controls: ControlSet, disc: Discretization) -> TrafficState:
    """Advance one time step; builds a throwaway TrafficModel."""
    return TrafficModel(net, disc).step(state, controls)


def simulate(net: Network, controls: ControlSet, disc: Discretization) -> TrafficTrajectory:
    """Run the scheme over the whole horizon."""
    model = TrafficModel(net, disc)
    trajectory = model.run(controls)
    logger.debug(f"Simulated {disc.steps} steps on {model.layout.n_cells} cells")
    return trajectory
