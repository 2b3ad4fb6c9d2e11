"""Run artifacts: CSV tables, JSON reports, VTK snapshots and the adjoint cache."""

import hashlib
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import meshio
import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.config import settings
from src.dispersion.mesh import TriMesh
from src.dispersion.solver import PollutionParams, ScalarFieldSeries, time_average
from src.dispersion.wind import WindField
from src.errors import ConfigurationError
from src.functionals import FunctionalReport
from src.network.model import ControlSet, Network
from src.traffic.layout import Discretization
from src.traffic.simulator import TrafficTrajectory
from src.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def write_json(payload: Union[BaseModel, Dict], path: PathLike, exclude: Optional[set] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2, exclude=exclude)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT)
    return path


def trajectory_frame(traj: TrafficTrajectory) -> pd.DataFrame:
    """Long table: one row per (time level n, cell) with the cell midpoint arclength."""
    layout = traj.layout
    steps, cells = traj.rho.shape
    cell_index = np.arange(cells) - np.repeat(layout.offsets[:-1], np.diff(layout.offsets))
    return pd.DataFrame(
        {
            "n": np.repeat(np.arange(steps), cells),
            "t": np.repeat(traj.times, cells),
            "road": np.tile(layout.cell_road, steps),
            "cell": np.tile(cell_index, steps),
            "s": np.tile(layout.midpoint_s, steps),
            "rho": traj.rho.ravel(),
        }
    )


def boundary_frame(traj: TrafficTrajectory, net: Network) -> pd.DataFrame:
    """Per-step entry queues and boundary flows."""
    rows: List[pd.DataFrame] = []
    for y, inflow in enumerate(net.inflows):
        rows.append(
            pd.DataFrame(
                {
                    "n": np.arange(len(traj.times)),
                    "t": traj.times,
                    "kind": "inflow",
                    "road": inflow.road,
                    "desired": traj.desired_inflow[:, y],
                    "flow": traj.inflow_flux[:, y],
                    "queue": traj.q[:, y],
                }
            )
        )
    for z, outflow in enumerate(net.outflows):
        rows.append(
            pd.DataFrame(
                {
                    "n": np.arange(len(traj.times)),
                    "t": traj.times,
                    "kind": "outflow",
                    "road": outflow.road,
                    "desired": np.nan,
                    "flow": traj.outflow_flux[:, z],
                    "queue": np.nan,
                }
            )
        )
    return pd.concat(rows, ignore_index=True)


def write_trajectory(traj: TrafficTrajectory, net: Network, out_dir: PathLike) -> List[Path]:
    out_dir = Path(out_dir)
    files = [
        _write_csv(trajectory_frame(traj), out_dir / "trajectory.csv"),
        _write_csv(boundary_frame(traj, net), out_dir / "boundary.csv"),
    ]
    logger.info(f"Trajectory written to {out_dir}")
    return files


def controls_frame(controls: ControlSet, net: Network) -> pd.DataFrame:
    """One row per (junction, incoming, outgoing) with alpha and beta."""
    rows = []
    for j in net.junctions:
        alpha = controls.alpha_matrix(j)
        beta = controls.beta_matrix(j)
        for k, road_in in enumerate(j.incoming):
            for l, road_out in enumerate(j.outgoing):
                rows.append(
                    {
                        "junction": j.id,
                        "incoming": road_in,
                        "outgoing": road_out,
                        "alpha": alpha[l, k],
                        "beta": beta[k, l],
                    }
                )
    return pd.DataFrame(rows, columns=["junction", "incoming", "outgoing", "alpha", "beta"])


def write_controls_table(controls: ControlSet, net: Network, path: PathLike) -> Path:
    return _write_csv(controls_frame(controls, net), path)


def write_history(history: List[float], mean_history: List[float], path: PathLike) -> Path:
    frame = pd.DataFrame(
        {"generation": np.arange(len(history)), "best": history, "mean": mean_history[: len(history)]}
    )
    return _write_csv(frame, path)


def write_field_vtk(
    mesh: TriMesh,
    series: ScalarFieldSeries,
    out_dir: PathLike,
    stride: Optional[int] = None,
) -> List[Path]:
    """
    ASCII legacy VTK snapshots every ``stride`` steps (last step always included)
    plus the trapezoid time mean, and an index CSV mapping files to times.
    """
    stride = stride or settings.VTK_STRIDE
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = np.column_stack([mesh.vertices, np.zeros(mesh.n_vertices)])
    cells = [("triangle", mesh.triangles)]

    steps = list(range(0, series.steps + 1, stride))
    if steps[-1] != series.steps:
        steps.append(series.steps)

    files: List[Path] = []
    index = []
    for n in steps:
        path = out_dir / f"{series.name}_{n:06d}.vtk"
        snapshot = meshio.Mesh(points, cells, point_data={series.name: series[n]})
        meshio.write(path, snapshot, file_format="vtk", binary=False)
        files.append(path)
        index.append({"file": path.name, "n": n, "t": float(series.times[n])})

    mean_path = out_dir / f"{series.name}_mean.vtk"
    meshio.write(
        mean_path,
        meshio.Mesh(points, cells, point_data={f"{series.name}_mean": time_average(series)}),
        file_format="vtk",
        binary=False,
    )
    files.append(mean_path)
    files.append(_write_csv(pd.DataFrame(index), out_dir / f"{series.name}_series.csv"))
    logger.info(f"Wrote {len(steps)} {series.name} snapshots to {out_dir}")
    return files


def write_comparison(reports: Iterable[FunctionalReport], path: PathLike) -> pd.DataFrame:
    """Cases sorted by J_P ascending (stable on ties)."""
    frame = pd.DataFrame(
        [
            {"case": r.case or r.command, "scenario": r.scenario, "command": r.command, "JT": r.JT, "JP": r.JP}
            for r in reports
        ],
        columns=["case", "scenario", "command", "JT", "JP"],
    )
    frame = frame.sort_values("JP", kind="stable").reset_index(drop=True)
    _write_csv(frame, path)
    return frame


def adjoint_cache_key(mesh: TriMesh, wind: WindField, params: PollutionParams, disc: Discretization, substeps: int) -> str:
    """SHA-256 of everything the adjoint depends on."""
    digest = hashlib.sha256()
    for array in (mesh.vertices, mesh.triangles, wind.times, wind.values):
        a = np.ascontiguousarray(array)
        digest.update(str(a.dtype).encode())
        digest.update(str(a.shape).encode())
        digest.update(a.tobytes())
    digest.update(
        json.dumps(
            {"mu": params.mu, "kappa": params.kappa, "dt": disc.dt, "steps": disc.steps, "substeps": substeps},
            sort_keys=True,
        ).encode()
    )
    return digest.hexdigest()


def save_adjoint_cache(g: ScalarFieldSeries, key: str, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez_compressed(fh, key=np.array(key), times=g.times, values=g.values)
    logger.info(f"Adjoint cached at {path}")
    return path


def load_adjoint_cache(key: str, path: PathLike) -> Optional[ScalarFieldSeries]:
    """Cached adjoint for ``key``, or None when missing, stale or unreadable."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        with np.load(path) as data:
            if str(data["key"]) != key:
                logger.info(f"Adjoint cache {path.name} belongs to other inputs; recomputing")
                return None
            return ScalarFieldSeries(times=data["times"], values=data["values"], name="g")
    except (OSError, KeyError, ValueError) as e:
        logger.warning(f"Ignoring unreadable adjoint cache {path}: {e}")
        return None


def read_report(path: PathLike) -> FunctionalReport:
    path = Path(path)
    try:
        return FunctionalReport.model_validate_json(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"cannot read run report {path}: {e}") from e
