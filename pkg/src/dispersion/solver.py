"""P1 finite-element solvers for the pollutant concentration and its adjoint."""

from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.sparse.linalg import factorized, spsolve

from src.dispersion.mesh import TriMesh
from src.dispersion.wind import WindField
from src.errors import ConfigurationError, NumericalFailure
from src.traffic.layout import Discretization
from src.utils.logger import get_logger

logger = get_logger(__name__)

NEGATIVITY_TOL = 1e-9


class PollutionParams(BaseModel):
    """Diffusion (km^2/h), extinction rate (1/h) and initial concentration (kg/km^2)."""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(default=3.5e-8, ge=0)
    kappa: float = Field(default=0.6e-2, ge=0)
    phi0: Union[float, List[float]] = Field(
        default=0.0, description="Uniform value or one value per mesh vertex"
    )

    @field_validator("phi0")
    @classmethod
    def check_nonnegative(cls, v):
        values = v if isinstance(v, list) else [v]
        if any(x < 0 for x in values):
            raise ValueError("phi0 must be nonnegative")
        return v

    def initial_field(self, mesh: TriMesh) -> np.ndarray:
        if isinstance(self.phi0, list):
            if len(self.phi0) != mesh.n_vertices:
                raise ConfigurationError(
                    f"phi0 has {len(self.phi0)} values for {mesh.n_vertices} vertices"
                )
            return np.asarray(self.phi0, dtype=float)
        return np.full(mesh.n_vertices, float(self.phi0))


@dataclass(frozen=True)
class ScalarFieldSeries:
    """Nodal values at t^0..t^N."""

    times: np.ndarray
    values: np.ndarray
    name: str = "phi"

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def __getitem__(self, n: int) -> np.ndarray:
        return self.values[n]


class TransportOperator:
    """
    Spatial operator A(v) of -div(mu grad u) + v.grad u + kappa u with Robin
    inflow terms, plus the lumped mass M.

    Convection is Galerkin with the triangle-mean wind, made an M-matrix by
    edge-based discrete upwinding: for every pair (i, j) the symmetric diffusion
    d_ij = max(K_ij, 0, K_ji) is subtracted off-diagonal and added on the diagonal.
    """

    def __init__(self, mesh: TriMesh, mu: float, kappa: float):
        self.mesh = mesh
        self.kappa = kappa
        self.grads = mesh.gradients()
        tri = mesh.triangles
        self._rows = np.repeat(tri, 3, axis=1).ravel()
        self._cols = np.tile(tri, (1, 3)).ravel()

        local_stiffness = mesh.areas[:, None, None] * np.einsum("tkd,tld->tkl", self.grads, self.grads)
        self.stiffness = self._assemble(mu * local_stiffness)
        self.mass = mesh.lumped_mass

    def _assemble(self, local: np.ndarray) -> sp.csr_matrix:
        n = self.mesh.n_vertices
        return sp.csr_matrix((local.ravel(), (self._rows, self._cols)), shape=(n, n))

    def convection(self, nodal_wind: np.ndarray) -> sp.csr_matrix:
        """C_kl = (|T|/3) vbar . grad phi_l on every triangle."""
        vbar = nodal_wind[self.mesh.triangles].mean(axis=1)
        row = (self.mesh.areas / 3.0)[:, None] * np.einsum("td,tld->tl", vbar, self.grads)
        local = np.repeat(row[:, None, :], 3, axis=1)
        return self._assemble(local)

    def robin(self, nodal_wind: np.ndarray) -> np.ndarray:
        """Lumped diagonal of the inflow term: (-v.n)|e|/2 on each S^- edge endpoint."""
        edges = self.mesh.boundary_edges
        mid = 0.5 * (nodal_wind[edges[:, 0]] + nodal_wind[edges[:, 1]])
        vn = np.einsum("ij,ij->i", mid, self.mesh.normals)
        weight = np.where(vn < 0.0, -vn * self.mesh.edge_lengths / 2.0, 0.0)
        diag = np.zeros(self.mesh.n_vertices)
        np.add.at(diag, edges[:, 0], weight)
        np.add.at(diag, edges[:, 1], weight)
        return diag

    def matrix(self, nodal_wind: np.ndarray) -> sp.csr_matrix:
        k = (self.convection(nodal_wind) + self.stiffness).tocsr()
        pairs = k.maximum(k.T.tocsr()).tocoo()
        keep = (pairs.row != pairs.col) & (pairs.data > 0.0)
        upwind = sp.csr_matrix(
            (pairs.data[keep], (pairs.row[keep], pairs.col[keep])), shape=k.shape
        )
        diffusion = sp.diags(np.asarray(upwind.sum(axis=1)).ravel()) - upwind
        diag = self.kappa * self.mass + self.robin(nodal_wind)
        return (k + diffusion + sp.diags(diag)).tocsr()


def _march(
    mesh: TriMesh,
    wind_at: Callable[[float], np.ndarray],
    steady: bool,
    params: PollutionParams,
    loads: np.ndarray,
    initial: np.ndarray,
    dt: float,
    steps: int,
    substeps: int,
    name: str,
) -> np.ndarray:
    """
    Implicit Euler: (M/h + A(v(t+h))) u^{+} = M/h u + load^{n+1}, h = dt/substeps.

    The load of step n+1 is held over its substeps. Only full steps are stored.
    """
    if substeps < 1:
        raise ConfigurationError("substeps must be a positive integer")
    h = dt / substeps
    operator = TransportOperator(mesh, params.mu, params.kappa)
    mass_over_h = operator.mass / h
    lhs_diag = sp.diags(mass_over_h)

    solve = None
    if steady:
        solve = factorized((lhs_diag + operator.matrix(wind_at(0.0))).tocsc())

    values = np.empty((steps + 1, mesh.n_vertices))
    values[0] = initial
    u = initial.copy()
    for n in range(steps):
        for sub in range(substeps):
            t_next = n * dt + (sub + 1) * h
            rhs = mass_over_h * u + loads[n + 1]
            if solve is not None:
                u = solve(rhs)
            else:
                u = spsolve((lhs_diag + operator.matrix(wind_at(t_next))).tocsc(), rhs)
        if not np.all(np.isfinite(u)):
            raise NumericalFailure(f"non-finite {name} values", step=n + 1)
        values[n + 1] = u

    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if values.size and values.min() < -NEGATIVITY_TOL * max(peak, 1e-300):
        logger.warning(f"{name} dipped to {values.min():.3g} (peak {peak:.3g})")
    return values


def _check_compatible(mesh: TriMesh, wind: WindField, disc: Discretization, loads: np.ndarray) -> None:
    if wind.values.shape[1] != mesh.n_vertices:
        raise ConfigurationError(
            f"wind has {wind.values.shape[1]} nodes, mesh has {mesh.n_vertices}"
        )
    if loads.shape != (disc.steps + 1, mesh.n_vertices):
        raise ConfigurationError(
            f"loads shape {loads.shape} does not match ({disc.steps + 1}, {mesh.n_vertices})"
        )


def solve_pollution(
    mesh: TriMesh,
    wind: WindField,
    params: PollutionParams,
    emissions: np.ndarray,
    disc: Discretization,
    queue_sources: Optional[np.ndarray] = None,
    substeps: int = 1,
) -> ScalarFieldSeries:
    """
    Concentration phi on the traffic time grid.

    Args:
        mesh: Triangulation
        wind: Advection field
        params: mu, kappa and phi^0
        emissions: (steps+1, Nv) nodal road loads (kg/h), see assemble_emissions
        disc: Traffic discretization providing dt and steps
        queue_sources: Optional (steps+1, Nv) queue point loads
        substeps: Implicit Euler substeps per traffic step

    Returns:
        ScalarFieldSeries named "phi"
    """
    loads = np.asarray(emissions, dtype=float)
    if queue_sources is not None:
        loads = loads + queue_sources
    _check_compatible(mesh, wind, disc, loads)
    values = _march(
        mesh, wind.at, wind.is_steady, params, loads, params.initial_field(mesh),
        disc.dt, disc.steps, substeps, "phi",
    )
    logger.debug(f"Pollution solved over {disc.steps} steps")
    return ScalarFieldSeries(times=disc.times, values=values, name="phi")


def adjoint_source_loads(mesh: TriMesh, disc: Discretization) -> np.ndarray:
    """Nodal loads of the constant adjoint source 1/(T|Omega|)."""
    if disc.horizon <= 0:
        raise ConfigurationError("adjoint needs a positive horizon")
    per_vertex = mesh.lumped_mass / (disc.horizon * mesh.domain_area)
    return np.tile(per_vertex, (disc.steps + 1, 1))


def solve_adjoint(
    mesh: TriMesh,
    wind: WindField,
    params: PollutionParams,
    disc: Discretization,
    substeps: int = 1,
) -> ScalarFieldSeries:
    """
    Adjoint state g on the traffic time grid, g(., T) = 0.

    Solved forward in tau = T - t as a transport problem with wind -v(T - tau),
    which moves the Robin term onto S^+ of the original field.
    """
    loads = adjoint_source_loads(mesh, disc)
    backward = wind.reversed(disc.horizon)
    _check_compatible(mesh, backward, disc, loads)
    values = _march(
        mesh, backward.at, backward.is_steady, params, loads, np.zeros(mesh.n_vertices),
        disc.dt, disc.steps, substeps, "g",
    )
    logger.info(f"Adjoint solved: {disc.steps} steps on {mesh.n_vertices} vertices")
    return ScalarFieldSeries(times=disc.times, values=values[::-1].copy(), name="g")


def time_average(series: ScalarFieldSeries) -> np.ndarray:
    """Trapezoid time mean of a nodal series."""
    if series.steps == 0:
        return series.values[0].copy()
    return np.trapezoid(series.values, series.times, axis=0) / (series.times[-1] - series.times[0])
