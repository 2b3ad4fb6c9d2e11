"""Time/space discretization and the flat cell layout the simulator runs on."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.errors import ConfigurationError
from src.network.model import Junction, Network, TimeSeries
from src.utils.logger import get_logger

logger = get_logger(__name__)

CFL_TOL = 1e-12


@dataclass(frozen=True)
class Discretization:
    """
    Uniform time grid t^n = n*dt, n = 0..steps, and per-road cell sizes.

    cells[i] * ds[i] equals the length of road i; steps * dt equals the horizon.
    """

    dt: float
    steps: int
    horizon: float
    cells: Dict[int, int]
    ds: Dict[int, float]
    cfl_safety: float = 0.9

    @classmethod
    def build(
        cls,
        net: Network,
        horizon: float,
        cell_size: float,
        dt: Optional[float] = None,
        cfl_safety: float = 0.9,
    ) -> "Discretization":
        """
        Split every road into ceil(L_i / cell_size) equal cells.

        Without ``dt`` the largest CFL-admissible step dividing the horizon is used.
        The CFL condition is checked either way.
        """
        if horizon < 0:
            raise ConfigurationError("horizon must be nonnegative")
        if cell_size <= 0:
            raise ConfigurationError("cell_size must be positive")
        if not 0 < cfl_safety <= 1:
            raise ConfigurationError("cfl_safety must lie in (0, 1]")

        cells: Dict[int, int] = {}
        ds: Dict[int, float] = {}
        for road in net.roads:
            m = max(1, math.ceil(road.length / cell_size - 1e-9))
            cells[road.id] = m
            ds[road.id] = road.length / m

        if dt is None:
            dt_max = min(cfl_safety * ds[r.id] / r.fd.max_wave_speed for r in net.roads)
            steps = math.ceil(horizon / dt_max - 1e-12) if horizon > 0 else 0
            dt = horizon / steps if steps else dt_max
        else:
            if dt <= 0:
                raise ConfigurationError("dt must be positive")
            steps = int(round(horizon / dt))
            if abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
                raise ConfigurationError(
                    f"horizon {horizon} is not an integer multiple of dt {dt}"
                )
            if steps:
                dt = horizon / steps

        disc = cls(dt=dt, steps=steps, horizon=horizon, cells=cells, ds=ds, cfl_safety=cfl_safety)
        disc.check_cfl(net)
        logger.debug(
            f"Discretization: dt={dt:.6g} h, N={steps}, cells={sum(cells.values())}"
        )
        return disc

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)

    def check_cfl(self, net: Network) -> None:
        """Raise ConfigurationError if dt * max|f'| > cfl_safety * ds_i on any road."""
        for road in net.roads:
            if road.id not in self.ds:
                raise ConfigurationError(f"road {road.id} missing from discretization")
            lhs = self.dt * road.fd.max_wave_speed
            rhs = self.cfl_safety * self.ds[road.id]
            if lhs > rhs * (1 + CFL_TOL):
                raise ConfigurationError(
                    f"CFL violated on road {road.id}: dt*max|f'| = {lhs:.6g} > "
                    f"{self.cfl_safety}*ds = {rhs:.6g}",
                    road=road.id,
                )

    def refined(self, net: Network, time_factor: int = 2, space_factor: int = 1) -> "Discretization":
        """Same horizon with dt divided by time_factor and cells multiplied by space_factor."""
        cells = {rid: m * space_factor for rid, m in self.cells.items()}
        ds = {rid: net.road(rid).length / m for rid, m in cells.items()}
        disc = Discretization(
            dt=self.horizon / (self.steps * time_factor) if self.steps else self.dt,
            steps=self.steps * time_factor,
            horizon=self.horizon,
            cells=cells,
            ds=ds,
            cfl_safety=self.cfl_safety,
        )
        disc.check_cfl(net)
        return disc


@dataclass(frozen=True)
class JunctionPorts:
    """Cell indices a junction couples: last cells of incoming, first cells of outgoing."""

    junction: Junction
    in_cells: np.ndarray
    out_cells: np.ndarray


@dataclass(frozen=True)
class NetworkLayout:
    """
    All roads laid end to end in one flat cell array, with per-cell diagram data.

    Cells of road ``road_ids[r]`` occupy ``offsets[r]:offsets[r+1]``.
    """

    road_ids: List[int]
    offsets: np.ndarray
    ds: np.ndarray
    v_free: np.ndarray
    rho_max: np.ndarray
    rho_crit: np.ndarray
    triangular: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray
    eps_density: np.ndarray
    midpoint_s: np.ndarray
    midpoints: np.ndarray
    interior_left: np.ndarray
    interior_right: np.ndarray
    junctions: List[JunctionPorts]
    inflow_roads: List[int]
    inflow_cells: np.ndarray
    inflow_cap: np.ndarray
    inflow_q0: np.ndarray
    inflow_series: List[TimeSeries]
    outflow_roads: List[int]
    outflow_cells: np.ndarray
    outflow_series: List[TimeSeries]
    rho0: np.ndarray
    dt: float
    steps: int
    cell_road: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return int(self.offsets[-1])

    def road_slice(self, road_id: int) -> slice:
        r = self.road_ids.index(road_id)
        return slice(int(self.offsets[r]), int(self.offsets[r + 1]))

    def first_cell(self, road_id: int) -> int:
        return self.road_slice(road_id).start

    def last_cell(self, road_id: int) -> int:
        return self.road_slice(road_id).stop - 1

    def diagram(self) -> tuple:
        """Per-cell (v_free, rho_max, rho_crit, triangular) for the vector kernels."""
        return self.v_free, self.rho_max, self.rho_crit, self.triangular

    @classmethod
    def compile(cls, net: Network, disc: Discretization) -> "NetworkLayout":
        road_ids = [r.id for r in net.roads]
        counts = [disc.cells[rid] for rid in road_ids]
        offsets = np.concatenate(([0], np.cumsum(counts))).astype(int)
        n = int(offsets[-1])

        def per_cell(values) -> np.ndarray:
            return np.repeat(np.asarray(values), counts)

        ds = per_cell([disc.ds[rid] for rid in road_ids]).astype(float)
        fds = [r.fd for r in net.roads]

        midpoint_s = np.empty(n)
        midpoints = np.empty((n, 2))
        rho0 = np.empty(n)
        for r, road in enumerate(net.roads):
            sl = slice(offsets[r], offsets[r + 1])
            s = (np.arange(counts[r]) + 0.5) * disc.ds[road.id]
            midpoint_s[sl] = s
            midpoints[sl] = road.point_at(s)
            rho0[sl] = net.initial_density(road.id, s)

        # interfaces between consecutive cells of the same road
        left = np.arange(n - 1)
        same_road = np.ones(n - 1, dtype=bool)
        same_road[offsets[1:-1] - 1] = False
        interior_left = left[same_road]

        def first(rid: int) -> int:
            return int(offsets[road_ids.index(rid)])

        def last(rid: int) -> int:
            return int(offsets[road_ids.index(rid) + 1] - 1)

        junctions = [
            JunctionPorts(
                junction=j,
                in_cells=np.array([last(k) for k in j.incoming], dtype=int),
                out_cells=np.array([first(l) for l in j.outgoing], dtype=int),
            )
            for j in net.junctions
        ]

        return cls(
            road_ids=road_ids,
            offsets=offsets,
            ds=ds,
            v_free=per_cell([fd.v_free for fd in fds]).astype(float),
            rho_max=per_cell([fd.rho_max for fd in fds]).astype(float),
            rho_crit=per_cell([fd.critical_density for fd in fds]).astype(float),
            triangular=per_cell([fd.is_triangular for fd in fds]).astype(bool),
            gamma=per_cell([r.gamma for r in net.roads]).astype(float),
            eta=per_cell([r.eta for r in net.roads]).astype(float),
            eps_density=per_cell([r.eps_density for r in net.roads]).astype(float),
            midpoint_s=midpoint_s,
            midpoints=midpoints,
            interior_left=interior_left,
            interior_right=interior_left + 1,
            junctions=junctions,
            inflow_roads=[b.road for b in net.inflows],
            inflow_cells=np.array([first(b.road) for b in net.inflows], dtype=int),
            inflow_cap=np.array([b.cap_in for b in net.inflows], dtype=float),
            inflow_q0=np.array([b.q0 for b in net.inflows], dtype=float),
            inflow_series=[b.f_in for b in net.inflows],
            outflow_roads=[b.road for b in net.outflows],
            outflow_cells=np.array([last(b.road) for b in net.outflows], dtype=int),
            outflow_series=[b.f_out for b in net.outflows],
            rho0=rho0,
            dt=disc.dt,
            steps=disc.steps,
            cell_road=per_cell(road_ids).astype(int),
        )
