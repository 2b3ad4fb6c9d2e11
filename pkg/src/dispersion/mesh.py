"""Unstructured triangular meshes: validation, loaders, generators and refinement."""

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import meshio
import numpy as np

from src.errors import MeshError
from src.utils.logger import get_logger

logger = get_logger(__name__)

AREA_TOL = 1e-10


@dataclass(frozen=True)
class TriMesh:
    """
    Conforming P1 triangulation with counter-clockwise triangles.

    Boundary edges are oriented with the domain on their left, so the outward
    unit normal of edge (a, b) is (dy, -dx) / |e|.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    areas: np.ndarray
    normals: np.ndarray
    edge_lengths: np.ndarray
    lumped_mass: np.ndarray
    domain_area: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @classmethod
    def from_arrays(
        cls,
        vertices,
        triangles,
        boundary_edges: Optional[np.ndarray] = None,
    ) -> "TriMesh":
        """
        Validate and orient a triangulation.

        Args:
            vertices: (Nv, 2) coordinates in km
            triangles: (Nt, 3) vertex indices, any orientation
            boundary_edges: Optional (Nb, 2) listed boundary; must match the computed one

        Raises:
            MeshError: degenerate triangles, non-manifold edges, unused vertices,
                open boundary loops, or a listed boundary that disagrees
        """
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.array(triangles, dtype=int)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must be an (N, 2) array")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
            raise MeshError("triangles must be a non-empty (N, 3) array")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshError("triangle references a missing vertex")

        signed = _signed_areas(vertices, triangles)
        scale = max(np.ptp(vertices[:, 0]), np.ptp(vertices[:, 1]), 1e-300) ** 2
        if np.any(np.abs(signed) <= AREA_TOL * scale):
            bad = int(np.argmin(np.abs(signed)))
            raise MeshError(f"triangle {bad} is degenerate", triangle=bad)
        flip = signed < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        areas = np.abs(signed)

        used = np.zeros(len(vertices), dtype=bool)
        used[triangles.ravel()] = True
        if not used.all():
            raise MeshError(f"{int((~used).sum())} vertices belong to no triangle")

        directed = np.concatenate(
            [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
        )
        undirected = Counter(map(tuple, np.sort(directed, axis=1)))
        if any(count > 2 for count in undirected.values()):
            raise MeshError("an edge is shared by more than two triangles")
        is_boundary = np.array([undirected[tuple(sorted(e))] == 1 for e in directed])
        edges = directed[is_boundary]

        # closed loops: every boundary vertex starts one edge and ends one edge
        starts = Counter(edges[:, 0].tolist())
        ends = Counter(edges[:, 1].tolist())
        if starts != ends or any(c != 1 for c in starts.values()):
            raise MeshError("boundary edges do not form closed loops")

        if boundary_edges is not None:
            listed = {tuple(sorted(map(int, e))) for e in np.asarray(boundary_edges)}
            computed = {tuple(sorted(e)) for e in edges.tolist()}
            if listed != computed:
                raise MeshError(
                    "listed boundary edges disagree with the triangulation",
                    missing=len(computed - listed),
                    extra=len(listed - computed),
                )

        d = vertices[edges[:, 1]] - vertices[edges[:, 0]]
        lengths = np.hypot(d[:, 0], d[:, 1])
        normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]

        domain_area = float(areas.sum())
        a, b = vertices[edges[:, 0]], vertices[edges[:, 1]]
        enclosed = 0.5 * float(np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))
        if abs(enclosed - domain_area) > AREA_TOL * max(domain_area, 1.0):
            raise MeshError(
                f"triangles cover {domain_area:.12g} but the boundary encloses {enclosed:.12g}"
            )

        lumped = np.zeros(len(vertices))
        np.add.at(lumped, triangles.ravel(), np.repeat(areas / 3.0, 3))

        return cls(
            vertices=vertices,
            triangles=triangles,
            boundary_edges=edges,
            areas=areas,
            normals=normals,
            edge_lengths=lengths,
            lumped_mass=lumped,
            domain_area=domain_area,
        )

    @classmethod
    def rectangle(
        cls, x0: float, y0: float, x1: float, y1: float, nx: int, ny: int
    ) -> "TriMesh":
        """Structured nx x ny grid of squares, each cut along its SW-NE diagonal."""
        if nx < 1 or ny < 1 or x1 <= x0 or y1 <= y0:
            raise MeshError("rectangle needs x1 > x0, y1 > y0 and nx, ny >= 1")
        xs = np.linspace(x0, x1, nx + 1)
        ys = np.linspace(y0, y1, ny + 1)
        gx, gy = np.meshgrid(xs, ys)
        vertices = np.column_stack([gx.ravel(), gy.ravel()])

        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        sw = (j * (nx + 1) + i).ravel()
        se, nw = sw + 1, sw + nx + 1
        ne = nw + 1
        triangles = np.concatenate(
            [np.column_stack([sw, se, ne]), np.column_stack([sw, ne, nw])]
        )
        return cls.from_arrays(vertices, triangles)

    def refine(self) -> "TriMesh":
        """Split every triangle into four through its edge midpoints."""
        edges = np.sort(
            np.concatenate(
                [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
            ),
            axis=1,
        )
        unique, inverse = np.unique(edges, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        mids = 0.5 * (self.vertices[unique[:, 0]] + self.vertices[unique[:, 1]])
        vertices = np.vstack([self.vertices, mids])

        nt = self.n_triangles
        m01 = self.n_vertices + inverse[:nt]
        m12 = self.n_vertices + inverse[nt : 2 * nt]
        m20 = self.n_vertices + inverse[2 * nt :]
        v0, v1, v2 = self.triangles.T
        triangles = np.concatenate(
            [
                np.column_stack([v0, m01, m20]),
                np.column_stack([m01, v1, m12]),
                np.column_stack([m20, m12, v2]),
                np.column_stack([m01, m12, m20]),
            ]
        )
        return TriMesh.from_arrays(vertices, triangles)

    def gradients(self) -> np.ndarray:
        """(Nt, 3, 2) gradients of the three P1 basis functions on each triangle."""
        p = self.vertices[self.triangles]
        x, y = p[:, :, 0], p[:, :, 1]
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        return np.stack([b, c], axis=2) / (2.0 * self.areas)[:, None, None]


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def read_plain(path: Union[str, Path]) -> TriMesh:
    """
    Read the plain node/element format.

    Layout (``#`` starts a comment, indices are 0-based)::

        Nv Nt Nb
        x y            (Nv lines)
        i j k          (Nt lines)
        a b            (Nb lines)
    """
    path = Path(path)
    rows = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    try:
        nv, nt, nb = (int(v) for v in rows[0])
        body = rows[1:]
        if len(body) != nv + nt + nb:
            raise MeshError(
                f"{path.name}: header announces {nv + nt + nb} lines, found {len(body)}"
            )
        vertices = np.array(body[:nv], dtype=float)
        triangles = np.array(body[nv : nv + nt], dtype=int)
        boundary = np.array(body[nv + nt :], dtype=int).reshape(-1, 2)
    except (ValueError, IndexError) as e:
        raise MeshError(f"{path.name}: malformed mesh file ({e})") from e
    return TriMesh.from_arrays(vertices, triangles, boundary if nb else None)


def write_plain(mesh: TriMesh, path: Union[str, Path]) -> Path:
    """Write a mesh in the plain format read by read_plain."""
    path = Path(path)
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"{a} {b}" for a, b in mesh.boundary_edges]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_gmsh(path: Union[str, Path]) -> TriMesh:
    """Import the triangles of a gmsh file through meshio; boundary is recomputed."""
    path = Path(path)
    try:
        mesh = meshio.read(path)
    except Exception as e:
        raise MeshError(f"{path.name}: cannot read gmsh file ({e})") from e
    triangles = [block.data for block in mesh.cells if block.type == "triangle"]
    if not triangles:
        raise MeshError(f"{path.name}: no triangle cells")
    triangles = np.concatenate(triangles)
    # drop points that only define geometry (e.g. unused gmsh nodes)
    used = np.unique(triangles)
    remap = -np.ones(len(mesh.points), dtype=int)
    remap[used] = np.arange(len(used))
    return TriMesh.from_arrays(mesh.points[used, :2], remap[triangles])


def load_mesh(path: Union[str, Path]) -> TriMesh:
    """Dispatch on suffix: ``.msh`` goes through gmsh import, anything else is plain."""
    path = Path(path)
    if not path.exists():
        raise MeshError(f"mesh file not found: {path}")
    mesh = read_gmsh(path) if path.suffix.lower() == ".msh" else read_plain(path)
    logger.info(
        f"Loaded mesh {path.name}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles"
    )
    return mesh
