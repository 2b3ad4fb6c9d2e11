"""Discrete travel-cost and pollution objectives."""

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.dispersion.mesh import TriMesh
from src.dispersion.road_map import RoadMeshMap, build_road_mesh_map, emission_rates, eval_on_roads
from src.dispersion.solver import PollutionParams, ScalarFieldSeries, solve_adjoint
from src.dispersion.wind import WindField
from src.errors import ConfigurationError
from src.network.model import Network, diagram_flux
from src.traffic.layout import Discretization
from src.traffic.simulator import TrafficTrajectory
from src.utils.logger import get_logger

logger = get_logger(__name__)


class FunctionalWeights(BaseModel):
    """Travel-cost weights: per road density, per inflow queue, per outflow."""

    eps_density: Dict[int, float]
    eps_queue: List[float]
    eps_out: List[float]

    @classmethod
    def from_network(cls, net: Network) -> "FunctionalWeights":
        return cls(
            eps_density={r.id: r.eps_density for r in net.roads},
            eps_queue=[b.eps_queue for b in net.inflows],
            eps_out=[b.eps_out for b in net.outflows],
        )

    def scaled(self, factor: float) -> "FunctionalWeights":
        return FunctionalWeights(
            eps_density={k: factor * v for k, v in self.eps_density.items()},
            eps_queue=[factor * v for v in self.eps_queue],
            eps_out=[factor * v for v in self.eps_out],
        )

    def check_nonnegative(self) -> None:
        values = list(self.eps_density.values()) + self.eps_queue + self.eps_out
        if any(v < 0 for v in values):
            raise ConfigurationError("functional weights must be nonnegative")


def eval_JT(traj: TrafficTrajectory, weights: FunctionalWeights, disc: Discretization) -> float:
    """
    J_T = dt * sum_{n=0..N} ( sum_y eps_q q_y + sum_i eps_i ds_i sum_h rho_ih
                              - sum_z eps_out f_z(rho at the last cell of z) ).
    """
    weights.check_nonnegative()
    lay = traj.layout
    if traj.rho.shape[0] != disc.steps + 1:
        raise ConfigurationError(
            f"trajectory has {traj.rho.shape[0]} rows for {disc.steps} steps"
        )
    missing = [rid for rid in lay.road_ids if rid not in weights.eps_density]
    if missing:
        raise ConfigurationError(f"no density weight for roads {missing}")
    if len(weights.eps_queue) != traj.q.shape[1] or len(weights.eps_out) != len(lay.outflow_roads):
        raise ConfigurationError(
            "weights do not match the boundary count",
            inflows=traj.q.shape[1],
            outflows=len(lay.outflow_roads),
        )

    eps_cells = np.repeat(
        [weights.eps_density[rid] for rid in lay.road_ids], np.diff(lay.offsets)
    )
    density_term = traj.rho @ (eps_cells * lay.ds)
    queue_term = traj.q @ np.asarray(weights.eps_queue, dtype=float)

    out_cells = lay.outflow_cells
    params = [p[out_cells] for p in lay.diagram()]
    exit_flux = diagram_flux(traj.rho[:, out_cells], *params)
    outflow_term = exit_flux @ np.asarray(weights.eps_out, dtype=float)

    return float(disc.dt * np.sum(queue_term + density_term - outflow_term))


def eval_JP_adjoint(
    traj: TrafficTrajectory,
    g_on_roads: np.ndarray,
    g_field: ScalarFieldSeries,
    net: Network,
    params: PollutionParams,
    mesh: TriMesh,
    disc: Discretization,
    road_map: Optional[RoadMeshMap] = None,
    queue_term_dt: bool = False,
) -> float:
    """
    Mean pollution through the adjoint state.

    J_P = dt sum_{n=1..N} sum_cells ds (gamma f + eta rho) g^n(midpoint)
        + sum_{n=1..N} sum_{y on S^-} lambda_y q_y^n g^n(queue vertex)
        + sum_j m_j phi0_j g0_j

    The queue term carries no dt unless ``queue_term_dt`` is set.

    Args:
        traj: Traffic trajectory on the disc grid
        g_on_roads: (steps+1, cells) adjoint sampled at the cell midpoints
        g_field: Nodal adjoint series
        net: Network the trajectory was simulated on
        params: Provides phi^0
        mesh: Mesh of g_field
        disc: Shared time grid
        road_map: Needed only when some inflow has lambda_q > 0
        queue_term_dt: Multiply the queue term by dt

    Raises:
        ConfigurationError: grids or shapes disagree
    """
    steps = disc.steps
    if g_field.values.shape != (steps + 1, mesh.n_vertices):
        raise ConfigurationError(
            f"adjoint shape {g_field.values.shape} does not match ({steps + 1}, {mesh.n_vertices})"
        )
    if g_on_roads.shape != traj.rho.shape:
        raise ConfigurationError(
            f"road adjoint shape {g_on_roads.shape} does not match trajectory {traj.rho.shape}"
        )

    cell_emission = emission_rates(traj) * traj.layout.ds
    traffic_term = disc.dt * float(np.sum(cell_emission[1:] * g_on_roads[1:]))

    queue_term = 0.0
    lambdas = np.array([b.lambda_q for b in net.inflows], dtype=float)
    if np.any(lambdas > 0):
        if road_map is None or road_map.queue_inflow is None:
            raise ConfigurationError("queue emissions need a road map built with wind")
        g_queue = g_field.values[:, road_map.queue_vertices]
        active = road_map.queue_inflow
        contrib = np.where(active, lambdas[None, :] * traj.q * g_queue, 0.0)
        queue_term = float(contrib[1:].sum()) * (disc.dt if queue_term_dt else 1.0)

    phi0 = params.initial_field(mesh)
    initial_term = float(np.sum(mesh.lumped_mass * phi0 * g_field.values[0]))
    return traffic_term + queue_term + initial_term


def eval_JP_direct(phi: ScalarFieldSeries, mesh: TriMesh, disc: Discretization) -> float:
    """(1/(T|Omega|)) * trapezoid-in-time of the lumped spatial integral of phi."""
    if phi.values.shape != (disc.steps + 1, mesh.n_vertices):
        raise ConfigurationError(
            f"field shape {phi.values.shape} does not match ({disc.steps + 1}, {mesh.n_vertices})"
        )
    if disc.steps == 0:
        return float(phi.values[0] @ mesh.lumped_mass) / mesh.domain_area
    spatial = phi.values @ mesh.lumped_mass
    weights = np.full(disc.steps + 1, disc.dt)
    weights[[0, -1]] *= 0.5
    return float(weights @ spatial) / (disc.horizon * mesh.domain_area)


@dataclass(frozen=True)
class AdjointState:
    """Adjoint field computed once per scenario plus everything J_P needs from it."""

    g: ScalarFieldSeries
    g_roads: np.ndarray
    road_map: RoadMeshMap
    mesh: TriMesh
    params: PollutionParams
    disc: Discretization
    queue_term_dt: bool = False

    @classmethod
    def compute(
        cls,
        net: Network,
        mesh: TriMesh,
        wind: WindField,
        params: PollutionParams,
        disc: Discretization,
        substeps: int = 1,
        queue_term_dt: bool = False,
    ) -> "AdjointState":
        g = solve_adjoint(mesh, wind, params, disc, substeps=substeps)
        road_map = build_road_mesh_map(net, mesh, disc, wind)
        return cls.from_field(g, road_map, mesh, params, disc, queue_term_dt)

    @classmethod
    def from_field(
        cls,
        g: ScalarFieldSeries,
        road_map: RoadMeshMap,
        mesh: TriMesh,
        params: PollutionParams,
        disc: Discretization,
        queue_term_dt: bool = False,
    ) -> "AdjointState":
        return cls(
            g=g,
            g_roads=eval_on_roads(g, road_map),
            road_map=road_map,
            mesh=mesh,
            params=params,
            disc=disc,
            queue_term_dt=queue_term_dt,
        )

    def jp(self, traj: TrafficTrajectory, net: Network) -> float:
        return eval_JP_adjoint(
            traj,
            self.g_roads,
            self.g,
            net,
            self.params,
            self.mesh,
            self.disc,
            road_map=self.road_map,
            queue_term_dt=self.queue_term_dt,
        )


def duality_gap(jp_adjoint: float, jp_direct: float) -> float:
    """Relative gap |adjoint - direct| / |direct|."""
    return abs(jp_adjoint - jp_direct) / max(abs(jp_direct), np.finfo(float).tiny)


class FunctionalReport(BaseModel):
    """Objective values of one run, written as functionals.json."""

    scenario: str
    command: str
    case: Optional[str] = Field(default=None, description="Label used by the comparison table")
    JT: Optional[float] = None
    JP: Optional[float] = None
    JP_direct: Optional[float] = None
    duality_gap: Optional[float] = None
    evaluations: Dict[str, int] = Field(default_factory=dict)
    wall_time: Optional[float] = Field(default=None, description="Seconds; omitted from deterministic artifacts")

    def to_text(self) -> str:
        """Plain key/value rendering for the console."""
        lines = [f"scenario: {self.scenario}", f"command: {self.command}"]
        if self.case:
            lines.append(f"case: {self.case}")
        for key in ("JT", "JP", "JP_direct", "duality_gap"):
            value = getattr(self, key)
            if value is not None:
                lines.append(f"{key}: {value:.6e}")
        for key, count in sorted(self.evaluations.items()):
            lines.append(f"{key}: {count}")
        if self.wall_time is not None:
            lines.append(f"wall_time: {self.wall_time:.2f} s")
        return "\n".join(lines)
