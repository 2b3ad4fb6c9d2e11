"""Time-sampled nodal wind fields and boundary inflow/outflow classification."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.dispersion.mesh import TriMesh
from src.errors import ConfigurationError


@dataclass(frozen=True)
class WindField:
    """
    Nodal wind vectors (km/h) at sample times, linear in time between samples.

    ``values`` has shape (K, Nv, 2); a single sample means a steady field.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[2] != 2:
            raise ConfigurationError("wind values must have shape (K, Nv, 2)")
        if len(self.times) != len(self.values):
            raise ConfigurationError("wind needs one time per sample")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("wind sample times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("wind values must be finite")

    @classmethod
    def constant(cls, mesh: TriMesh, vx: float, vy: float) -> "WindField":
        values = np.tile(np.array([vx, vy], dtype=float), (1, mesh.n_vertices, 1))
        return cls(times=np.array([0.0]), values=values)

    @classmethod
    def from_samples(
        cls, mesh: TriMesh, times: Sequence[float], vectors: Sequence[Sequence[float]]
    ) -> "WindField":
        """Spatially uniform wind that varies in time."""
        vectors = np.asarray(vectors, dtype=float)
        values = np.repeat(vectors[:, None, :], mesh.n_vertices, axis=1)
        return cls(times=np.asarray(times, dtype=float), values=values)

    @property
    def is_steady(self) -> bool:
        return len(self.times) == 1

    def at(self, t: float) -> np.ndarray:
        """(Nv, 2) nodal wind at time t (held constant outside the sampled range)."""
        if self.is_steady or t <= self.times[0]:
            return self.values[0]
        if t >= self.times[-1]:
            return self.values[-1]
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    def negated(self) -> "WindField":
        return WindField(times=self.times.copy(), values=-self.values)

    def reversed(self, horizon: float) -> "WindField":
        """Field tau -> -v(horizon - tau), the advection of the backward problem."""
        return WindField(times=(horizon - self.times)[::-1].copy(), values=-self.values[::-1])

    def edge_normal_speed(self, mesh: TriMesh, t: float) -> np.ndarray:
        """v . n at every boundary-edge midpoint."""
        v = self.at(t)
        mid = 0.5 * (v[mesh.boundary_edges[:, 0]] + v[mesh.boundary_edges[:, 1]])
        return np.einsum("ij,ij->i", mid, mesh.normals)

    def inflow_edges(self, mesh: TriMesh, t: float) -> np.ndarray:
        """Boolean mask of S^- edges (v . n < 0); ties count as outflow."""
        return self.edge_normal_speed(mesh, t) < 0.0
