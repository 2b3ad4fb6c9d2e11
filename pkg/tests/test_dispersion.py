"""Tests for meshes, wind fields, road coupling and the transport solvers."""

import numpy as np
import pytest

from src.dispersion import (
    PollutionParams,
    TransportOperator,
    TriMesh,
    WindField,
    adjoint_source_loads,
    assemble_emissions,
    assemble_queue_sources,
    build_road_mesh_map,
    emission_rates,
    eval_on_roads,
    load_mesh,
    read_plain,
    solve_adjoint,
    solve_pollution,
    time_average,
    write_plain,
)
from src.errors import ConfigurationError, MeshError
from src.network import DIAMOND_DOMAIN, BoundaryInflow, ControlSet, TimeSeries, diamond
from src.traffic import Discretization, simulate


def bare_discretization(dt: float, steps: int) -> Discretization:
    """Time grid without roads, for pollution-only runs."""
    return Discretization(dt=dt, steps=steps, horizon=dt * steps, cells={}, ds={})


class TestTriMesh:
    """Tests for mesh validation, generation and refinement."""

    def test_rectangle(self):
        """Test a 2x2 rectangle mesh has the expected counts and masses."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)

        assert mesh.n_vertices == 9
        assert mesh.n_triangles == 8
        assert len(mesh.boundary_edges) == 8
        assert mesh.domain_area == pytest.approx(1.0)
        assert mesh.lumped_mass.sum() == pytest.approx(1.0)

    def test_normals_point_outward(self):
        """Test boundary normals are unit vectors pointing away from the domain."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 4, 2)
        mid = 0.5 * (mesh.vertices[mesh.boundary_edges[:, 0]] + mesh.vertices[mesh.boundary_edges[:, 1]])

        np.testing.assert_allclose(np.hypot(*mesh.normals.T), 1.0)
        outward = (mid + 0.01 * mesh.normals - np.array([1.0, 0.5]))
        assert np.all((np.abs(outward[:, 0]) > 1.0) | (np.abs(outward[:, 1]) > 0.5))

    def test_orientation_is_fixed(self):
        """Test clockwise input triangles are flipped to positive area."""
        mesh = TriMesh.from_arrays([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])

        assert mesh.areas[0] == pytest.approx(0.5)
        assert mesh.domain_area == pytest.approx(0.5)

    def test_degenerate_triangle(self):
        """Test collinear vertices are rejected."""
        with pytest.raises(MeshError, match="degenerate"):
            TriMesh.from_arrays([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])

    def test_unused_vertex(self):
        """Test vertices outside every triangle are rejected."""
        with pytest.raises(MeshError, match="no triangle"):
            TriMesh.from_arrays([[0, 0], [1, 0], [0, 1], [5, 5]], [[0, 1, 2]])

    def test_bow_tie_boundary(self):
        """Test two triangles touching in one vertex do not form a valid boundary."""
        vertices = [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]]

        with pytest.raises(MeshError, match="closed loops"):
            TriMesh.from_arrays(vertices, [[0, 1, 2], [0, 3, 4]])

    def test_listed_boundary_must_match(self):
        """Test a listed boundary that misses edges is rejected."""
        with pytest.raises(MeshError, match="disagree"):
            TriMesh.from_arrays([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], boundary_edges=[[0, 1]])

    def test_refine(self):
        """Test refinement quadruples triangles and keeps the area."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)

        fine = mesh.refine()

        assert fine.n_triangles == 4 * mesh.n_triangles
        assert fine.n_vertices == 25
        assert fine.domain_area == pytest.approx(mesh.domain_area)

    def test_plain_file(self, tmp_path):
        """Test a mesh written in the plain format reads back the same."""
        mesh = TriMesh.rectangle(0.0, 0.0, 3.0, 2.0, 3, 2)
        path = write_plain(mesh, tmp_path / "grid.mesh")

        loaded = load_mesh(path)

        np.testing.assert_allclose(loaded.vertices, mesh.vertices)
        np.testing.assert_array_equal(loaded.triangles, mesh.triangles)

    def test_plain_file_bad_header(self, tmp_path):
        """Test a header that miscounts lines is rejected."""
        path = tmp_path / "bad.mesh"
        path.write_text("3 1 0\n0 0\n1 0\n0 1\n", encoding="utf-8")

        with pytest.raises(MeshError, match="header"):
            read_plain(path)

    def test_missing_file(self, tmp_path):
        """Test loading a missing mesh file is a MeshError."""
        with pytest.raises(MeshError, match="not found"):
            load_mesh(tmp_path / "absent.msh")


class TestWindField:
    """Tests for time-sampled wind."""

    def test_constant_is_steady(self):
        """Test a constant field has one sample and the same value at all times."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)
        wind = WindField.constant(mesh, 3.0, -1.0)

        assert wind.is_steady
        np.testing.assert_allclose(wind.at(7.5), np.tile([3.0, -1.0], (9, 1)))

    def test_interpolation_and_reversal(self):
        """Test linear interpolation in time and the backward field."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)
        wind = WindField.from_samples(mesh, [0.0, 2.0], [[0.0, 0.0], [4.0, 2.0]])
        backward = wind.reversed(2.0)

        np.testing.assert_allclose(wind.at(0.5)[0], [1.0, 0.5])
        np.testing.assert_allclose(backward.at(1.5)[0], -wind.at(0.5)[0])

    def test_inflow_edges(self):
        """Test an eastward wind enters through the western edges only."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 3, 2)
        wind = WindField.constant(mesh, 1.0, 0.0)

        inflow = wind.inflow_edges(mesh, 0.0)

        assert inflow.sum() == 2
        np.testing.assert_allclose(mesh.normals[inflow], [[-1.0, 0.0], [-1.0, 0.0]])

    def test_bad_shape(self):
        """Test malformed sample arrays are rejected."""
        with pytest.raises(ConfigurationError):
            WindField(times=np.array([0.0]), values=np.zeros((1, 4, 3)))


class TestTransportOperator:
    """Tests for the upwinded transport matrix."""

    def test_m_matrix(self):
        """Test off-diagonal entries are nonpositive and the diagonal positive."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 6, 3)
        operator = TransportOperator(mesh, mu=1e-3, kappa=0.1)
        wind = WindField.constant(mesh, 30.0, -10.0)

        matrix = operator.matrix(wind.at(0.0)).tocoo()

        off = matrix.row != matrix.col
        assert np.all(matrix.data[off] <= 1e-12)
        assert np.all(matrix.diagonal() > 0.0)


class TestSolvePollution:
    """Tests for the forward concentration solver."""

    def test_no_sources_stays_zero(self):
        """Test zero emissions and zero initial concentration give zero."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 4, 4)
        wind = WindField.constant(mesh, 5.0, 5.0)
        disc = bare_discretization(0.1, 5)

        phi = solve_pollution(mesh, wind, PollutionParams(), np.zeros((6, mesh.n_vertices)), disc)

        np.testing.assert_allclose(phi.values, 0.0)

    def test_uniform_decay(self):
        """Test a uniform field without wind decays by 1/(1 + kappa dt) per step."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 4, 4)
        wind = WindField.constant(mesh, 0.0, 0.0)
        params = PollutionParams(mu=1e-3, kappa=0.5, phi0=2.0)
        disc = bare_discretization(0.1, 10)

        phi = solve_pollution(mesh, wind, params, np.zeros((11, mesh.n_vertices)), disc)

        expected = 2.0 / (1.0 + 0.5 * 0.1) ** np.arange(11)
        np.testing.assert_allclose(phi.values, np.tile(expected[:, None], (1, mesh.n_vertices)))

    def test_uniform_source_matches_exponential(self):
        """Test a uniform unit source without wind approaches (1 - e^{-kappa t}) / kappa over a day."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 4, 2)
        wind = WindField.constant(mesh, 0.0, 0.0)
        kappa = 0.6e-2
        disc = bare_discretization(0.1, 240)
        loads = np.tile(mesh.lumped_mass, (disc.steps + 1, 1))

        phi = solve_pollution(mesh, wind, PollutionParams(mu=1e-2, kappa=kappa), loads, disc)

        exact = (1.0 - np.exp(-kappa * disc.times)) / kappa
        np.testing.assert_allclose(phi.values[1:], np.outer(exact[1:], np.ones(mesh.n_vertices)), rtol=1e-3)

    def test_pure_decay_matches_exponential(self):
        """Test a uniform field without wind or sources approaches phi0 e^{-kappa t} over a day."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 4, 2)
        wind = WindField.constant(mesh, 0.0, 0.0)
        kappa = 0.6e-2
        disc = bare_discretization(0.1, 240)

        phi = solve_pollution(
            mesh, wind, PollutionParams(mu=1e-2, kappa=kappa, phi0=3.0), np.zeros((241, mesh.n_vertices)), disc
        )

        exact = 3.0 * np.exp(-kappa * disc.times)
        np.testing.assert_allclose(phi.values, np.outer(exact, np.ones(mesh.n_vertices)), rtol=1e-3)

    def test_mass_grows_by_emissions(self):
        """Test without wind or decay the lumped mass grows by dt times the emitted load each step."""
        mesh = TriMesh.rectangle(0.0, 0.0, 3.0, 2.0, 6, 4)
        wind = WindField.constant(mesh, 0.0, 0.0)
        disc = bare_discretization(0.05, 20)
        rng = np.random.default_rng(8)
        loads = rng.uniform(0.0, 50.0, size=(21, mesh.n_vertices))

        phi = solve_pollution(mesh, wind, PollutionParams(mu=0.3, kappa=0.0), loads, disc)

        mass = phi.values @ mesh.lumped_mass
        np.testing.assert_allclose(np.diff(mass), disc.dt * loads[1:].sum(axis=1), rtol=1e-8)

    def test_positive_sources_keep_positivity(self):
        """Test a point source under unsteady wind never produces negative values."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 2.0, 8, 8)
        wind = WindField.from_samples(mesh, [0.0, 1.0], [[20.0, 0.0], [-5.0, 15.0]])
        disc = bare_discretization(0.05, 20)
        loads = np.zeros((21, mesh.n_vertices))
        loads[:, 40] = 100.0

        phi = solve_pollution(mesh, wind, PollutionParams(), loads, disc, substeps=2)

        assert phi.values.min() >= -1e-12
        assert phi.values[-1].max() > 0.0
        assert time_average(phi).shape == (mesh.n_vertices,)

    def test_load_shape_checked(self):
        """Test loads that do not match the time grid are rejected."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)
        wind = WindField.constant(mesh, 0.0, 0.0)

        with pytest.raises(ConfigurationError):
            solve_pollution(mesh, wind, PollutionParams(), np.zeros((3, 9)), bare_discretization(0.1, 5))


class TestSolveAdjoint:
    """Tests for the backward adjoint solver."""

    def test_terminal_condition_and_sign(self):
        """Test g vanishes at the horizon and is positive before it."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 6, 3)
        wind = WindField.from_samples(mesh, [0.0, 0.5], [[10.0, 0.0], [0.0, -10.0]])
        disc = bare_discretization(0.05, 10)

        g = solve_adjoint(mesh, wind, PollutionParams(), disc)

        np.testing.assert_allclose(g.values[-1], 0.0)
        assert g.values[:-1].min() > 0.0
        assert g.name == "g"

    def test_no_wind_closed_form(self):
        """Test without wind g follows the backward implicit Euler recursion."""
        mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 3, 3)
        wind = WindField.constant(mesh, 0.0, 0.0)
        params = PollutionParams(mu=1e-3, kappa=0.2)
        disc = bare_discretization(0.1, 10)

        g = solve_adjoint(mesh, wind, params, disc)

        source = 1.0 / (disc.horizon * mesh.domain_area)
        expected = [0.0]
        for _ in range(disc.steps):
            expected.append((expected[-1] / disc.dt + source) / (1.0 / disc.dt + params.kappa))
        np.testing.assert_allclose(g.values[:, 0], expected[::-1])

    def test_pure_mean_weight(self):
        """Test without wind or decay g is the remaining time over T|Omega| everywhere."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 4, 2)
        wind = WindField.constant(mesh, 0.0, 0.0)
        disc = bare_discretization(0.1, 10)

        g = solve_adjoint(mesh, wind, PollutionParams(mu=1e-2, kappa=0.0), disc)

        remaining = (disc.horizon - disc.times) / (disc.horizon * mesh.domain_area)
        np.testing.assert_allclose(g.values, np.outer(remaining, np.ones(mesh.n_vertices)), rtol=1e-6, atol=1e-12)

    def test_matches_exponential_weight(self):
        """Test without wind g approaches (1 - e^{-kappa (T - t)}) / (kappa T |Omega|) over a day."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 4, 2)
        wind = WindField.constant(mesh, 0.0, 0.0)
        kappa = 0.6e-2
        disc = bare_discretization(0.1, 240)

        g = solve_adjoint(mesh, wind, PollutionParams(mu=1e-2, kappa=kappa), disc)

        remaining = disc.horizon - disc.times
        exact = (1.0 - np.exp(-kappa * remaining)) / (kappa * disc.horizon * mesh.domain_area)
        np.testing.assert_allclose(g.values[:-1], np.outer(exact[:-1], np.ones(mesh.n_vertices)), rtol=1e-3)

    def test_forward_solve_with_reversed_wind(self):
        """Test g is the forward solve under -v with the adjoint source, read backwards in time."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 6, 3)
        wind = WindField.constant(mesh, 12.0, -4.0)
        params = PollutionParams(mu=1e-3, kappa=0.2)
        disc = bare_discretization(0.05, 12)

        g = solve_adjoint(mesh, wind, params, disc)
        forward = solve_pollution(mesh, wind.negated(), params, adjoint_source_loads(mesh, disc), disc)

        assert np.array_equal(g.values, forward.values[::-1])
        assert np.array_equal(g.times, disc.times)


class TestRoadMeshMap:
    """Tests for placing road cells on the mesh."""

    def setup_method(self):
        self.net = diamond()
        self.mesh = TriMesh.rectangle(*DIAMOND_DOMAIN, 9, 6)
        self.disc = Discretization.build(self.net, horizon=0.1, cell_size=0.5, dt=0.005)

    def test_emission_rows_match_line_integral(self):
        """Test nodal emission loads sum to the midpoint-rule road integral."""
        road_map = build_road_mesh_map(self.net, self.mesh, self.disc)
        traj = simulate(self.net, ControlSet.permissive(self.net), self.disc)

        loads = assemble_emissions(traj, road_map)

        expected = (emission_rates(traj) * traj.layout.ds).sum(axis=1)
        np.testing.assert_allclose(loads.sum(axis=1), expected)

    def test_interpolation_of_linear_field(self):
        """Test P1 interpolation reproduces a linear field at the midpoints."""
        road_map = build_road_mesh_map(self.net, self.mesh, self.disc)
        layout = simulate(self.net, ControlSet.permissive(self.net), self.disc).layout
        field = 2.0 * self.mesh.vertices[:, 0] - self.mesh.vertices[:, 1]

        sampled = eval_on_roads(field[None, :], road_map)

        np.testing.assert_allclose(sampled[0], 2.0 * layout.midpoints[:, 0] - layout.midpoints[:, 1])

    def test_queue_vertex_at_entry(self):
        """Test the queue vertex is the boundary vertex nearest the road entrance."""
        road_map = build_road_mesh_map(self.net, self.mesh, self.disc)

        np.testing.assert_allclose(self.mesh.vertices[road_map.queue_vertices[0]], [0.0, 1.5])

    def test_road_outside_mesh(self):
        """Test a road leaving the mesh is reported with its id."""
        small = TriMesh.rectangle(0.0, 0.0, 2.0, 3.0, 4, 6)

        with pytest.raises(ConfigurationError, match="road"):
            build_road_mesh_map(self.net, small, self.disc)

    def test_queue_sources_follow_inflow_boundary(self):
        """Test queue emissions appear only while the queue vertex is on inflow boundary."""
        inflow = self.net.inflows[0]
        net = self.net.model_copy(
            update={
                "inflows": [
                    BoundaryInflow(
                        road=inflow.road,
                        f_in=TimeSeries.constant(2500.0),
                        cap_in=1800.0,
                        eps_queue=0.45,
                        lambda_q=2.0,
                    )
                ]
            }
        )
        traj = simulate(net, ControlSet.permissive(net), self.disc)

        eastward = WindField.constant(self.mesh, 10.0, 0.0)
        westward = WindField.constant(self.mesh, -10.0, 0.0)
        entering = assemble_queue_sources(traj, build_road_mesh_map(net, self.mesh, self.disc, eastward), net)
        leaving = assemble_queue_sources(traj, build_road_mesh_map(net, self.mesh, self.disc, westward), net)

        vertex = build_road_mesh_map(net, self.mesh, self.disc).queue_vertices[0]
        np.testing.assert_allclose(entering[:, vertex], 2.0 * traj.q[:, 0])
        np.testing.assert_allclose(leaving, 0.0)

    def test_queue_sources_need_wind(self):
        """Test queue sources cannot be assembled without inflow flags."""
        road_map = build_road_mesh_map(self.net, self.mesh, self.disc)
        traj = simulate(self.net, ControlSet.permissive(self.net), self.disc)

        with pytest.raises(ConfigurationError):
            assemble_queue_sources(traj, road_map, self.net)
