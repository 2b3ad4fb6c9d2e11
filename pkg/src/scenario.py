"""Scenario files: schema, loading with full error reports, and canonical saving."""

import json
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from src.config import settings
from src.dispersion.mesh import TriMesh, load_mesh
from src.dispersion.road_map import build_road_mesh_map
from src.dispersion.solver import PollutionParams
from src.dispersion.wind import WindField
from src.errors import ConfigurationError, ScenarioError
from src.functionals import FunctionalWeights
from src.network.model import ControlSet, Network
from src.network.validation import check_beta_bounds, check_controls, validate_network
from src.optimize.stackelberg import StackelbergConfig
from src.traffic.layout import Discretization
from src.utils.logger import get_logger

logger = get_logger(__name__)

RELAXED_BOUNDS = (0.2, 0.8)


class RectangleSpec(BaseModel):
    x0: float
    y0: float
    x1: float
    y1: float
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)


class MeshSpec(BaseModel):
    """Either a mesh file (plain format or .msh) or a generated rectangle."""

    path: Optional[str] = None
    rectangle: Optional[RectangleSpec] = None

    @model_validator(mode="after")
    def check_one_source(self) -> "MeshSpec":
        if (self.path is None) == (self.rectangle is None):
            raise ValueError("give exactly one of 'path' or 'rectangle'")
        return self


class WindSample(BaseModel):
    t: float
    vx: float
    vy: float


class WindSpec(BaseModel):
    """Spatially uniform wind, steady or sampled in time (km/h)."""

    constant: Optional[Tuple[float, float]] = None
    samples: Optional[List[WindSample]] = None

    @model_validator(mode="after")
    def check_one_source(self) -> "WindSpec":
        if (self.constant is None) == (self.samples is None):
            raise ValueError("give exactly one of 'constant' or 'samples'")
        if self.samples is not None and not self.samples:
            raise ValueError("'samples' must not be empty")
        return self


class DiscretizationSpec(BaseModel):
    dt: Optional[float] = Field(default=None, gt=0, description="Time step (h); chosen from CFL when omitted")
    horizon: float = Field(ge=0, description="Final time T (h)")
    cell_size: float = Field(gt=0, description="Target cell length (km)")
    cfl_safety: float = Field(default=0.9, gt=0, le=1)
    pollution_substeps: int = Field(default=1, ge=1)


class Scenario(BaseModel):
    """Everything one run needs: network, mesh, wind, numerics and optimizer settings."""

    model_config = ConfigDict(extra="forbid")

    name: str
    network: Network
    mesh: MeshSpec
    wind: WindSpec
    pollution: PollutionParams = Field(default_factory=PollutionParams)
    discretization: DiscretizationSpec
    stackelberg: StackelbergConfig = Field(default_factory=StackelbergConfig)
    controls: Optional[ControlSet] = Field(default=None, description="Fixed controls for simulate/follower")
    beta_bounds: Tuple[float, float] = (0.0, 1.0)
    queue_term_dt: bool = False
    seed: Optional[int] = Field(default=None, ge=0)
    output_dir: Optional[str] = None

    _base_dir: Path = PrivateAttr(default_factory=Path.cwd)

    @model_validator(mode="after")
    def check_bounds(self) -> "Scenario":
        lo, hi = self.beta_bounds
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("beta_bounds must satisfy 0 <= lo <= hi <= 1")
        return self

    def resolve(self, path: Union[str, Path]) -> Path:
        """Paths inside a scenario are relative to the scenario file."""
        path = Path(path)
        return path if path.is_absolute() else self._base_dir / path

    def build_mesh(self) -> TriMesh:
        if self.mesh.rectangle is not None:
            r = self.mesh.rectangle
            return TriMesh.rectangle(r.x0, r.y0, r.x1, r.y1, r.nx, r.ny)
        return load_mesh(self.resolve(self.mesh.path))

    def build_wind(self, mesh: TriMesh) -> WindField:
        if self.wind.constant is not None:
            return WindField.constant(mesh, *self.wind.constant)
        samples = self.wind.samples
        return WindField.from_samples(mesh, [s.t for s in samples], [(s.vx, s.vy) for s in samples])

    def build_discretization(self) -> Discretization:
        d = self.discretization
        return Discretization.build(self.network, d.horizon, d.cell_size, dt=d.dt, cfl_safety=d.cfl_safety)

    def weights(self) -> FunctionalWeights:
        return FunctionalWeights.from_network(self.network)

    def fixed_controls(self) -> ControlSet:
        """Scenario controls completed with the uniform split wherever they are silent."""
        lo, hi = self.beta_bounds
        base = ControlSet.permissive(self.network, lo, hi)
        if self.controls is None:
            return base
        return ControlSet(
            alpha={**base.alpha, **self.controls.alpha},
            beta={**base.beta, **self.controls.beta},
            beta_lo=lo,
            beta_hi=hi,
        )

    def with_overrides(
        self,
        seed: Optional[int] = None,
        relaxed: bool = False,
        hybrid_follower: bool = False,
    ) -> "Scenario":
        """
        Apply CLI overrides; the effective seed drives both the GA and the follower starts.

        Precedence: explicit argument, then the scenario's own seed, then settings.DEFAULT_SEED.
        """
        effective = seed if seed is not None else (self.seed if self.seed is not None else settings.DEFAULT_SEED)
        sc = self.stackelberg
        follower = sc.follower.model_copy(
            update={
                "seed": effective,
                "hybrid": sc.follower.hybrid or hybrid_follower,
                "ga": sc.follower.ga.model_copy(update={"rng_seed": effective}),
            }
        )
        stackelberg = sc.model_copy(
            update={"ga": sc.ga.model_copy(update={"rng_seed": effective}), "follower": follower}
        )
        update = {"seed": effective, "stackelberg": stackelberg}
        if relaxed:
            update["beta_bounds"] = RELAXED_BOUNDS
        updated = self.model_copy(update=update)
        updated._base_dir = self._base_dir
        if relaxed:
            problems = updated.bounds_errors()
            if problems:
                raise ScenarioError(problems)
        return updated

    def bounds_errors(self) -> List[str]:
        """Bound feasibility and, when controls are fixed, their fit inside the bounds."""
        lo, hi = self.beta_bounds
        problems = [f"beta_bounds: {p}" for p in check_beta_bounds(self.network, lo, hi)]
        if self.controls is not None and not problems:
            problems += [f"controls: {v}" for v in check_controls(self.network, self.fixed_controls())]
        return problems


def _format_location(loc) -> str:
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += ("." if path else "") + str(part)
    return path


def _format_errors(error: ValidationError) -> List[str]:
    messages = []
    for err in error.errors():
        where = _format_location(err["loc"])
        what = "required" if err["type"] == "missing" else err["msg"]
        messages.append(f"{where}: {what}" if where else what)
    return messages


def semantic_errors(scenario: Scenario) -> List[str]:
    """Cross-field checks run after the schema passed; every problem is collected."""
    errors: List[str] = []
    net = scenario.network

    report = validate_network(net, scenario.fixed_controls() if scenario.controls else None)
    errors += [f"network: {v}" for v in report.violations]

    lo, hi = scenario.beta_bounds
    errors += [f"beta_bounds: {p}" for p in check_beta_bounds(net, lo, hi)]

    if scenario.mesh.path is not None and not scenario.resolve(scenario.mesh.path).exists():
        errors.append(f"mesh.path: file not found: {scenario.mesh.path}")
        return errors
    if not report.ok:
        return errors

    try:
        disc = scenario.build_discretization()
    except ConfigurationError as e:
        errors.append(f"discretization: {e.message}")
        return errors
    try:
        mesh = scenario.build_mesh()
        phi0 = scenario.pollution.phi0
        if isinstance(phi0, list) and len(phi0) != mesh.n_vertices:
            errors.append(f"pollution.phi0: {len(phi0)} values for {mesh.n_vertices} vertices")
        build_road_mesh_map(net, mesh, disc)
    except ConfigurationError as e:
        errors.append(f"mesh: {e.message}")
    return errors


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Parse and fully validate a scenario file.

    Raises:
        ScenarioError: every schema and semantic problem, each with its field path
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError([f"cannot read scenario: {e}"], path=str(path)) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError([f"line {e.lineno} column {e.colno}: {e.msg}"], path=str(path)) from e

    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(_format_errors(e), path=str(path)) from e
    scenario._base_dir = path.resolve().parent

    errors = semantic_errors(scenario)
    if errors:
        raise ScenarioError(errors, path=str(path))
    logger.info(
        f"Loaded scenario '{scenario.name}': {len(scenario.network.roads)} roads, "
        f"{len(scenario.network.junctions)} junctions"
    )
    return scenario


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    """Write canonical JSON (sinusoid shorthands come back as explicit samples)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(scenario.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
