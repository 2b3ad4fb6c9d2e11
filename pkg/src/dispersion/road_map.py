"""Road cells on the mesh: point location, interpolation and source assembly."""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp

from src.dispersion.mesh import TriMesh
from src.dispersion.wind import WindField
from src.errors import ConfigurationError
from src.network.model import Network, diagram_flux
from src.traffic.layout import Discretization, NetworkLayout
from src.traffic.simulator import TrafficTrajectory
from src.utils.logger import get_logger

logger = get_logger(__name__)

INSIDE_TOL = 1e-9
_CHUNK = 256


@dataclass(frozen=True)
class RoadMeshMap:
    """
    Where each road cell midpoint sits on the mesh.

    ``interp`` is the (cells x vertices) barycentric matrix: ``interp @ g`` samples a
    nodal field at the midpoints and ``interp.T @ e`` spreads cell values to vertices.
    ``queue_inflow`` (steps+1 x inflows) flags whether each queue vertex lies on S^-
    at t^n; it is None when the map was built without a wind field.
    """

    cell_triangles: np.ndarray
    barycentric: np.ndarray
    interp: sp.csr_matrix
    queue_vertices: np.ndarray
    queue_inflow: Optional[np.ndarray]
    n_vertices: int

    @property
    def n_cells(self) -> int:
        return len(self.cell_triangles)


def locate_points(mesh: TriMesh, points: np.ndarray):
    """
    Containing triangle and barycentric coordinates of each point.

    Returns (triangles, barycentric, inside) where ``inside`` is False for points
    more than INSIDE_TOL outside every triangle. Ties go to the lowest triangle index.
    """
    p = mesh.vertices[mesh.triangles]
    origin = p[:, 0]
    basis = np.stack([p[:, 1] - origin, p[:, 2] - origin], axis=2)
    inverse = np.linalg.inv(basis)

    points = np.atleast_2d(np.asarray(points, dtype=float))
    tri = np.empty(len(points), dtype=int)
    bary = np.empty((len(points), 3))
    inside = np.empty(len(points), dtype=bool)
    for start in range(0, len(points), _CHUNK):
        chunk = points[start : start + _CHUNK]
        rel = chunk[:, None, :] - origin[None, :, :]
        l12 = np.einsum("tij,mtj->mti", inverse, rel)
        full = np.concatenate([1.0 - l12.sum(axis=2, keepdims=True), l12], axis=2)
        score = full.min(axis=2)
        best = np.argmax(score, axis=1)
        rows = np.arange(len(chunk))
        tri[start : start + len(chunk)] = best
        bary[start : start + len(chunk)] = full[rows, best]
        inside[start : start + len(chunk)] = score[rows, best] >= -INSIDE_TOL

    # points within the tolerance but slightly outside are pulled onto the triangle
    negative = bary < 0
    if negative.any():
        rows = negative.any(axis=1)
        clipped = np.clip(bary[rows], 0.0, None)
        bary[rows] = clipped / clipped.sum(axis=1, keepdims=True)
    return tri, bary, inside


def build_road_mesh_map(
    net: Network,
    mesh: TriMesh,
    disc: Discretization,
    wind: Optional[WindField] = None,
) -> RoadMeshMap:
    """
    Map every road cell midpoint into the mesh and pick the queue vertices.

    Raises:
        ConfigurationError: a midpoint lies outside the mesh (names road and cell)
    """
    layout = NetworkLayout.compile(net, disc)
    tri, bary, inside = locate_points(mesh, layout.midpoints)
    if not inside.all():
        c = int(np.flatnonzero(~inside)[0])
        road = int(layout.cell_road[c])
        cell = c - layout.first_cell(road)
        raise ConfigurationError(
            f"road {road} cell {cell} midpoint {layout.midpoints[c].tolist()} lies outside the mesh",
            road=road,
            cell=cell,
        )

    rows = np.repeat(np.arange(len(tri)), 3)
    cols = mesh.triangles[tri].ravel()
    interp = sp.csr_matrix((bary.ravel(), (rows, cols)), shape=(len(tri), mesh.n_vertices))

    boundary_vertices = mesh.boundary_vertices
    queue_vertices = np.empty(len(net.inflows), dtype=int)
    for y, inflow in enumerate(net.inflows):
        entry = net.road(inflow.road).point_at(0.0)
        dist = np.hypot(*(mesh.vertices[boundary_vertices] - entry).T)
        queue_vertices[y] = boundary_vertices[int(np.argmin(dist))]

    queue_inflow = None
    if wind is not None:
        queue_inflow = queue_inflow_flags(mesh, wind, disc.times, queue_vertices)

    logger.debug(f"Mapped {len(tri)} road cells onto {mesh.n_triangles} triangles")
    return RoadMeshMap(
        cell_triangles=tri,
        barycentric=bary,
        interp=interp,
        queue_vertices=queue_vertices,
        queue_inflow=queue_inflow,
        n_vertices=mesh.n_vertices,
    )


def queue_inflow_flags(
    mesh: TriMesh, wind: WindField, times: np.ndarray, vertices: np.ndarray
) -> np.ndarray:
    """A vertex counts as S^- at t when any boundary edge touching it is inflow."""
    flags = np.zeros((len(times), len(vertices)), dtype=bool)
    for n, t in enumerate(times):
        inflow = wind.inflow_edges(mesh, float(t))
        on_inflow = np.unique(mesh.boundary_edges[inflow])
        flags[n] = np.isin(vertices, on_inflow)
    return flags


def eval_on_roads(field, road_map: RoadMeshMap) -> np.ndarray:
    """
    P1 interpolation of a nodal series at the road cell midpoints.

    Args:
        field: ScalarFieldSeries or (steps+1, Nv) array

    Returns:
        (steps+1, cells) array in layout order
    """
    values = getattr(field, "values", field)
    values = np.asarray(values, dtype=float)
    return np.asarray(road_map.interp @ values.T).T


def split_by_road(cell_values: np.ndarray, layout: NetworkLayout) -> Dict[int, np.ndarray]:
    """Per-road views of a (..., cells) array."""
    return {rid: cell_values[..., layout.road_slice(rid)] for rid in layout.road_ids}


def emission_rates(traj: TrafficTrajectory) -> np.ndarray:
    """gamma_i f_i(rho) + eta_i rho per state and cell (kg/(km h))."""
    lay = traj.layout
    return lay.gamma * diagram_flux(traj.rho, *lay.diagram()) + lay.eta * traj.rho


def assemble_emissions(traj: TrafficTrajectory, road_map: RoadMeshMap) -> np.ndarray:
    """
    Nodal loads (steps+1, Nv): each cell's ds*(gamma f + eta rho) spread by its
    barycentric weights, so every row sums to the midpoint-rule line integral.
    """
    cell_mass = emission_rates(traj) * traj.layout.ds
    return np.asarray(road_map.interp.T @ cell_mass.T).T


def assemble_queue_sources(traj: TrafficTrajectory, road_map: RoadMeshMap, net: Network) -> np.ndarray:
    """Point loads lambda_y q_y^n at each queue vertex while it lies on S^-."""
    loads = np.zeros((len(traj.times), road_map.n_vertices))
    if road_map.queue_inflow is None:
        raise ConfigurationError("road map was built without wind; queue sources need it")
    for y, inflow in enumerate(net.inflows):
        if inflow.lambda_q == 0.0:
            continue
        active = road_map.queue_inflow[:, y]
        loads[:, road_map.queue_vertices[y]] += np.where(active, inflow.lambda_q * traj.q[:, y], 0.0)
    return loads
