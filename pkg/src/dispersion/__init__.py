"""Pollutant dispersion on a triangular mesh and its adjoint."""

from src.dispersion.mesh import TriMesh, load_mesh, read_gmsh, read_plain, write_plain
from src.dispersion.road_map import (
    RoadMeshMap,
    assemble_emissions,
    assemble_queue_sources,
    build_road_mesh_map,
    emission_rates,
    eval_on_roads,
    locate_points,
    split_by_road,
)
from src.dispersion.solver import (
    PollutionParams,
    ScalarFieldSeries,
    TransportOperator,
    adjoint_source_loads,
    solve_adjoint,
    solve_pollution,
    time_average,
)
from src.dispersion.wind import WindField

__all__ = [
    # mesh
    "TriMesh",
    "load_mesh",
    "read_plain",
    "read_gmsh",
    "write_plain",
    # wind
    "WindField",
    # road coupling
    "RoadMeshMap",
    "locate_points",
    "build_road_mesh_map",
    "eval_on_roads",
    "split_by_road",
    "emission_rates",
    "assemble_emissions",
    "assemble_queue_sources",
    # solvers
    "PollutionParams",
    "ScalarFieldSeries",
    "TransportOperator",
    "solve_pollution",
    "adjoint_source_loads",
    "solve_adjoint",
    "time_average",
]
