"""Road network, fundamental diagrams, boundary data and junction controls."""

import math
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import ConfigurationError, DomainError

ArrayLike = Union[float, np.ndarray]


# vectorized diagram kernels, shared by the scalar API below and the cell-wise simulator
def diagram_flux(rho, v_free, rho_max, rho_crit, triangular):
    """Flux of a Greenshields or triangular diagram (array-friendly)."""
    green = v_free * rho * (1.0 - rho / rho_max)
    capacity = v_free * rho_crit
    wave = capacity / (rho_max - rho_crit)
    tri = np.where(rho <= rho_crit, v_free * rho, wave * (rho_max - rho))
    return np.where(triangular, tri, green)


def diagram_capacity(v_free, rho_max, rho_crit, triangular):
    """Capacity C = f(rho_crit)."""
    return np.where(triangular, v_free * rho_crit, v_free * rho_max / 4.0)


def diagram_demand(rho, v_free, rho_max, rho_crit, triangular):
    f = diagram_flux(rho, v_free, rho_max, rho_crit, triangular)
    return np.where(rho <= rho_crit, f, diagram_capacity(v_free, rho_max, rho_crit, triangular))


def diagram_supply(rho, v_free, rho_max, rho_crit, triangular):
    f = diagram_flux(rho, v_free, rho_max, rho_crit, triangular)
    return np.where(rho <= rho_crit, diagram_capacity(v_free, rho_max, rho_crit, triangular), f)


class FundamentalDiagram(BaseModel):
    """
    Static flux-density relation of one road.

    Greenshields: f(rho) = v_free * rho * (1 - rho / rho_max), rho_crit = rho_max / 2.
    Triangular: f(rho) = v_free * rho up to rho_crit, then linear down to f(rho_max) = 0.
    """

    model_config = ConfigDict(frozen=True)

    family: Literal["greenshields", "triangular"] = "greenshields"
    v_free: float = Field(default=60.0, gt=0, description="Free-flow speed (km/h)")
    rho_max: float = Field(default=120.0, gt=0, description="Jam density (veh/km)")
    rho_crit: Optional[float] = Field(
        default=None, gt=0, description="Critical density, triangular only (veh/km)"
    )

    @model_validator(mode="after")
    def check_critical_density(self) -> "FundamentalDiagram":
        if self.family == "triangular":
            if self.rho_crit is None:
                raise ValueError("rho_crit required for a triangular diagram")
            if not self.rho_crit < self.rho_max:
                raise ValueError("rho_crit must lie strictly below rho_max")
        elif self.rho_crit is not None and not math.isclose(self.rho_crit, self.rho_max / 2):
            raise ValueError("greenshields rho_crit is fixed at rho_max / 2")
        return self

    @property
    def is_triangular(self) -> bool:
        return self.family == "triangular"

    @property
    def critical_density(self) -> float:
        if self.is_triangular:
            return float(self.rho_crit)
        return self.rho_max / 2.0

    @property
    def capacity(self) -> float:
        return float(
            diagram_capacity(self.v_free, self.rho_max, self.critical_density, self.is_triangular)
        )

    @property
    def max_wave_speed(self) -> float:
        """max |f'| over [0, rho_max]."""
        if self.is_triangular:
            return max(self.v_free, self.capacity / (self.rho_max - self.critical_density))
        return self.v_free

    def params(self) -> Tuple[float, float, float, bool]:
        return self.v_free, self.rho_max, self.critical_density, self.is_triangular

    def _check(self, rho: ArrayLike) -> np.ndarray:
        arr = np.asarray(rho, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > self.rho_max):
            raise DomainError(
                f"density outside [0, {self.rho_max}]",
                rho=float(np.max(np.abs(arr))) if arr.size else None,
            )
        return arr

    def flux(self, rho: ArrayLike) -> ArrayLike:
        return _unwrap(diagram_flux(self._check(rho), *self.params()))

    def demand(self, rho: ArrayLike) -> ArrayLike:
        return _unwrap(diagram_demand(self._check(rho), *self.params()))

    def supply(self, rho: ArrayLike) -> ArrayLike:
        return _unwrap(diagram_supply(self._check(rho), *self.params()))


def _unwrap(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def flux(fd: FundamentalDiagram, rho: ArrayLike) -> ArrayLike:
    """Flow rate f(rho) in vehicles/h; raises DomainError outside [0, rho_max]."""
    return fd.flux(rho)


def demand(fd: FundamentalDiagram, rho: ArrayLike) -> ArrayLike:
    """Demand D(rho): f below rho_crit, capacity above."""
    return fd.demand(rho)


def supply(fd: FundamentalDiagram, rho: ArrayLike) -> ArrayLike:
    """Supply S(rho): capacity below rho_crit, f above."""
    return fd.supply(rho)


class TimeSeries(BaseModel):
    """
    Piecewise-linear function of time (h) given by samples.

    Held constant before the first and after the last sample. Also accepts a bare
    number (constant) or a ``{"sinusoid": {...}}`` generator expanded to samples.
    """

    model_config = ConfigDict(frozen=True)

    times: List[float] = Field(min_length=1)
    values: List[float] = Field(min_length=1)

    @model_validator(mode="before")
    @classmethod
    def expand_shorthand(cls, data):
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return {"times": [0.0], "values": [float(data)]}
        if isinstance(data, dict) and "sinusoid" in data:
            return _expand_sinusoid(data["sinusoid"])
        return data

    @model_validator(mode="after")
    def check_samples(self) -> "TimeSeries":
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have the same length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("values must be finite")
        return self

    @classmethod
    def constant(cls, value: float) -> "TimeSeries":
        return cls(times=[0.0], values=[float(value)])

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return _unwrap(np.interp(t, self.times, self.values))

    def minimum(self) -> float:
        return min(self.values)


def _expand_sinusoid(spec: Dict[str, float]) -> Dict[str, List[float]]:
    mean = float(spec["mean"])
    amplitude = float(spec.get("amplitude", 0.0))
    period = float(spec.get("period", 24.0))
    phase = float(spec.get("phase", 0.0))
    horizon = float(spec.get("horizon", period))
    samples = int(spec.get("samples", 49))
    if samples < 2:
        raise ValueError("sinusoid needs at least 2 samples")
    times = np.linspace(0.0, horizon, samples)
    values = mean + amplitude * np.sin(2.0 * np.pi * times / period + phase)
    return {"times": times.tolist(), "values": values.tolist()}


class Road(BaseModel):
    """
    Directed road parametrized by arc length along its polyline.

    The polyline orientation is the sense of motion; s = 0 is the entrance.
    """

    model_config = ConfigDict(frozen=True)

    id: int
    polyline: List[Tuple[float, float]] = Field(min_length=2)
    fd: FundamentalDiagram = Field(default_factory=FundamentalDiagram)
    gamma: float = Field(default=1.0e6, ge=0, description="Emission per flow")
    eta: float = Field(default=3.16e-5, ge=0, description="Emission per density")
    eps_density: float = Field(default=0.5, ge=0, description="Travel-cost weight")

    @field_validator("polyline")
    @classmethod
    def check_segments(cls, v: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        for a, b in zip(v, v[1:]):
            if math.hypot(b[0] - a[0], b[1] - a[1]) <= 0.0:
                raise ValueError("polyline has a zero-length segment")
        return v

    @property
    def cumulative_arclength(self) -> np.ndarray:
        pts = np.asarray(self.polyline, dtype=float)
        seg = np.hypot(*np.diff(pts, axis=0).T)
        return np.concatenate(([0.0], np.cumsum(seg)))

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    def point_at(self, s: ArrayLike) -> np.ndarray:
        """sigma_i(s) for arc-length positions s in [0, length]."""
        pts = np.asarray(self.polyline, dtype=float)
        cum = self.cumulative_arclength
        s_arr = np.clip(np.asarray(s, dtype=float), 0.0, cum[-1])
        return np.stack([np.interp(s_arr, cum, pts[:, 0]), np.interp(s_arr, cum, pts[:, 1])], axis=-1)

    @classmethod
    def from_points(cls, id: int, points, **kwargs) -> "Road":
        """Build a road from any vertex sequence, dropping repeated vertices."""
        cleaned: List[Tuple[float, float]] = []
        for p in points:
            p = (float(p[0]), float(p[1]))
            if not cleaned or cleaned[-1] != p:
                cleaned.append(p)
        return cls(id=id, polyline=cleaned, **kwargs)


class Junction(BaseModel):
    """Intersection; list order fixes the row/column order of the control matrices."""

    model_config = ConfigDict(frozen=True)

    id: int
    incoming: List[int]
    outgoing: List[int]


class BoundaryInflow(BaseModel):
    """Entry with a point queue at the start of road ``road``."""

    model_config = ConfigDict(frozen=True)

    road: int
    f_in: TimeSeries
    cap_in: float = Field(ge=0, description="Entry capacity (veh/h)")
    q0: float = Field(default=0.0, ge=0, description="Initial queue (veh)")
    eps_queue: float = Field(ge=0, description="Queue weight in the travel cost")
    lambda_q: float = Field(default=0.0, ge=0, description="Queue emission rate")


class BoundaryOutflow(BaseModel):
    """Exit at the end of road ``road`` with a time-dependent maximum outflow."""

    model_config = ConfigDict(frozen=True)

    road: int
    f_out: TimeSeries
    eps_out: float = Field(ge=0, description="Outflow reward weight")


class Network(BaseModel):
    """Complete network description; immutable after construction."""

    model_config = ConfigDict(frozen=True)

    roads: List[Road] = Field(min_length=1)
    junctions: List[Junction] = Field(default_factory=list)
    inflows: List[BoundaryInflow] = Field(default_factory=list)
    outflows: List[BoundaryOutflow] = Field(default_factory=list)
    rho0: Dict[int, Union[float, List[float]]] = Field(
        default_factory=dict,
        description="Initial density per road: a uniform value or equal-width profile",
    )

    def road(self, road_id: int) -> Road:
        for r in self.roads:
            if r.id == road_id:
                return r
        raise KeyError(f"unknown road {road_id}")

    def junction(self, junction_id: int) -> Junction:
        for j in self.junctions:
            if j.id == junction_id:
                return j
        raise KeyError(f"unknown junction {junction_id}")

    @property
    def road_ids(self) -> List[int]:
        return [r.id for r in self.roads]

    def initial_density(self, road_id: int, s: np.ndarray) -> np.ndarray:
        """rho_i^0 at arc-length positions s."""
        spec = self.rho0.get(road_id, 0.0)
        s = np.asarray(s, dtype=float)
        if isinstance(spec, (int, float)):
            return np.full(s.shape, float(spec))
        profile = np.asarray(spec, dtype=float)
        length = self.road(road_id).length
        idx = np.minimum((s / length * len(profile)).astype(int), len(profile) - 1)
        return profile[idx]


class ControlSet(BaseModel):
    """
    Junction controls.

    alpha[j] is an |out| x |in| matrix (alpha[l][k]): share of incoming k heading to l.
    beta[j] is an |in| x |out| matrix (beta[k][l]): share of l's supply granted to k.
    Junctions with a single outgoing (resp. incoming) road may omit alpha (resp. beta);
    the forced value 1 is used.
    """

    model_config = ConfigDict(frozen=True)

    alpha: Dict[int, List[List[float]]] = Field(default_factory=dict)
    beta: Dict[int, List[List[float]]] = Field(default_factory=dict)
    beta_lo: float = Field(default=0.0, ge=0, le=1)
    beta_hi: float = Field(default=1.0, ge=0, le=1)

    @model_validator(mode="after")
    def check_bounds_order(self) -> "ControlSet":
        if self.beta_lo > self.beta_hi:
            raise ValueError("beta_lo must not exceed beta_hi")
        return self

    def alpha_matrix(self, junction: Junction) -> np.ndarray:
        return self._matrix(self.alpha, junction, (len(junction.outgoing), len(junction.incoming)), "alpha")

    def beta_matrix(self, junction: Junction) -> np.ndarray:
        return self._matrix(self.beta, junction, (len(junction.incoming), len(junction.outgoing)), "beta")

    @staticmethod
    def _matrix(table, junction: Junction, shape: Tuple[int, int], name: str) -> np.ndarray:
        if junction.id in table:
            m = np.asarray(table[junction.id], dtype=float)
            if m.shape != shape:
                raise ConfigurationError(
                    f"{name} at junction {junction.id} has shape {m.shape}, expected {shape}"
                )
            return m
        if shape[0] == 1:
            return np.ones(shape)
        raise ConfigurationError(f"{name} missing for junction {junction.id}")

    @classmethod
    def permissive(cls, net: Network, beta_lo: float = 0.0, beta_hi: float = 1.0) -> "ControlSet":
        """Uniform split everywhere: every alpha column and beta column is uniform."""
        alpha = {}
        beta = {}
        for j in net.junctions:
            n_in, n_out = len(j.incoming), len(j.outgoing)
            alpha[j.id] = np.full((n_out, n_in), 1.0 / n_out).tolist()
            beta[j.id] = np.full((n_in, n_out), 1.0 / n_in).tolist()
        return cls(alpha=alpha, beta=beta, beta_lo=beta_lo, beta_hi=beta_hi)

    def with_alpha(self, alpha: Dict[int, List[List[float]]]) -> "ControlSet":
        return self.model_copy(update={"alpha": alpha})

    def with_beta(self, beta: Dict[int, List[List[float]]]) -> "ControlSet":
        return self.model_copy(update={"beta": beta})

    def with_bounds(self, beta_lo: float, beta_hi: float) -> "ControlSet":
        return self.model_copy(update={"beta_lo": beta_lo, "beta_hi": beta_hi})

    def check(self, net: Network) -> List[str]:
        """Violations of shape, stochasticity and bounds against ``net`` (empty when feasible)."""
        from src.network.validation import check_controls

        return [str(v) for v in check_controls(net, self)]
