"""Tests for the travel-cost and mean-pollution objectives."""

import numpy as np
import pytest

from src.dispersion import (
    PollutionParams,
    ScalarFieldSeries,
    TriMesh,
    WindField,
    assemble_emissions,
    solve_pollution,
)
from src.errors import ConfigurationError
from src.functionals import (
    AdjointState,
    FunctionalReport,
    FunctionalWeights,
    duality_gap,
    eval_JP_direct,
    eval_JT,
)
from src.network import DIAMOND_DOMAIN, ControlSet, diamond, single_road
from src.optimize import ControlEncoder
from src.traffic import Discretization, simulate


def pollution_gap(net, controls: ControlSet, mesh: TriMesh, wind_vector, disc: Discretization) -> float:
    """Relative gap between the adjoint and direct mean pollution of one run."""
    wind = WindField.constant(mesh, *wind_vector)
    params = PollutionParams()

    traj = simulate(net, controls, disc)
    adjoint = AdjointState.compute(net, mesh, wind, params, disc)
    phi = solve_pollution(mesh, wind, params, assemble_emissions(traj, adjoint.road_map), disc)

    return duality_gap(adjoint.jp(traj, net), eval_JP_direct(phi, mesh, disc))


def diamond_gap(wind_vector, dt: float) -> float:
    """Gap on the diamond with permissive controls."""
    net = diamond()
    disc = Discretization.build(net, horizon=1.0, cell_size=0.5, dt=dt)
    mesh = TriMesh.rectangle(*DIAMOND_DOMAIN, 12, 9)
    return pollution_gap(net, ControlSet.permissive(net), mesh, wind_vector, disc)


def random_gaps(seed: int):
    """Coarse and refined gaps of a diamond with random demand, controls and steady wind."""
    rng = np.random.default_rng(seed)
    net = diamond(
        f_in=rng.uniform(400.0, 1400.0),
        symmetric=bool(rng.integers(2)),
        four_junctions=bool(rng.integers(2)),
    )
    alpha = ControlEncoder(net, "alpha")
    beta = ControlEncoder(net, "beta")
    controls = ControlSet(
        alpha=alpha.decode(rng.uniform(size=alpha.n_genes)),
        beta=beta.decode(rng.uniform(size=beta.n_genes)),
    )
    angle, speed = rng.uniform(0.0, 2.0 * np.pi), rng.uniform(0.0, 10.0)
    wind_vector = (speed * np.cos(angle), speed * np.sin(angle))

    disc = Discretization.build(net, horizon=1.0, cell_size=0.5, dt=0.005)
    mesh = TriMesh.rectangle(*DIAMOND_DOMAIN, 12, 9)
    coarse = pollution_gap(net, controls, mesh, wind_vector, disc)
    fine = pollution_gap(net, controls, mesh.refine(), wind_vector, disc.refined(net, time_factor=2))
    return coarse, fine


class TestTravelCost:
    """Tests for eval_JT."""

    def test_steady_state_by_hand(self):
        """Test J_T of a road held at equilibrium density."""
        net = single_road(length=1.0, f_in=1350.0, rho0=30.0)
        disc = Discretization.build(net, horizon=0.05, cell_size=0.5, dt=0.005)
        traj = simulate(net, ControlSet(), disc)

        jt = eval_JT(traj, FunctionalWeights.from_network(net), disc)

        # per row: density 0.5 * 1.0 km * 30 minus reward 0.5 * f(30) = 15 - 675
        assert jt == pytest.approx(0.005 * 11 * (15.0 - 675.0))

    def test_queue_term(self):
        """Test an initial queue drains in one step and costs eps_q * q0 * dt."""
        net = single_road(length=1.0, f_in=0.0, q0=5.0)
        disc = Discretization.build(net, horizon=0.05, cell_size=0.5, dt=0.005)
        traj = simulate(net, ControlSet(), disc)
        weights = FunctionalWeights(eps_density={1: 0.0}, eps_queue=[0.45], eps_out=[0.0])

        assert traj.q[1, 0] == pytest.approx(0.0)
        assert eval_JT(traj, weights, disc) == pytest.approx(0.005 * 0.45 * 5.0)

    def test_linear_in_weights(self):
        """Test doubling every weight doubles J_T exactly."""
        net = diamond(f_in=2500.0, cap_in=1800.0, f_out=300.0)
        disc = Discretization.build(net, horizon=0.2, cell_size=0.5, dt=0.005)
        traj = simulate(net, ControlSet.permissive(net), disc)
        weights = FunctionalWeights.from_network(net)

        assert eval_JT(traj, weights.scaled(2.0), disc) == 2.0 * eval_JT(traj, weights, disc)

    def test_missing_density_weight(self):
        """Test a road without a weight is a configuration error."""
        net = single_road()
        disc = Discretization.build(net, horizon=0.05, cell_size=0.5, dt=0.005)
        traj = simulate(net, ControlSet(), disc)
        weights = FunctionalWeights(eps_density={}, eps_queue=[0.45], eps_out=[0.5])

        with pytest.raises(ConfigurationError, match="density weight"):
            eval_JT(traj, weights, disc)

    def test_negative_weight(self):
        """Test negative weights are rejected."""
        net = single_road()
        disc = Discretization.build(net, horizon=0.05, cell_size=0.5, dt=0.005)
        traj = simulate(net, ControlSet(), disc)

        with pytest.raises(ConfigurationError):
            eval_JT(traj, FunctionalWeights.from_network(net).scaled(-1.0), disc)


class TestMeanPollution:
    """Tests for the direct and adjoint pollution functionals."""

    def test_direct_constant_field(self):
        """Test the mean of a constant field is that constant."""
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 1.0, 4, 2)
        disc = Discretization(dt=0.1, steps=10, horizon=1.0, cells={}, ds={})
        phi = ScalarFieldSeries(times=disc.times, values=np.full((11, mesh.n_vertices), 3.0))

        assert eval_JP_direct(phi, mesh, disc) == pytest.approx(3.0)

    def test_adjoint_initial_term(self):
        """Test without traffic J_P reduces to the initial concentration paired with g^0."""
        net = single_road(length=1.0, origin=(0.5, 1.0))
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 2.0, 4, 4)
        disc = Discretization.build(net, horizon=0.1, cell_size=0.5, dt=0.005)
        wind = WindField.constant(mesh, 5.0, 0.0)
        params = PollutionParams(phi0=2.0)
        traj = simulate(net, ControlSet(), disc)

        adjoint = AdjointState.compute(net, mesh, wind, params, disc)

        expected = float(np.sum(mesh.lumped_mass * 2.0 * adjoint.g.values[0]))
        assert adjoint.jp(traj, net) == pytest.approx(expected)
        assert expected > 0.0

    def test_adjoint_grid_mismatch(self):
        """Test an adjoint from another time grid is rejected."""
        net = single_road(length=1.0, origin=(0.5, 1.0))
        mesh = TriMesh.rectangle(0.0, 0.0, 2.0, 2.0, 4, 4)
        coarse = Discretization.build(net, horizon=0.1, cell_size=0.5, dt=0.01)
        fine = Discretization.build(net, horizon=0.1, cell_size=0.5, dt=0.005)
        wind = WindField.constant(mesh, 5.0, 0.0)
        adjoint = AdjointState.compute(net, mesh, wind, PollutionParams(), coarse)

        traj = simulate(net, ControlSet(), fine)

        with pytest.raises(ConfigurationError):
            adjoint.jp(traj, net)

    def test_gap_is_relative(self):
        """Test the gap is relative to the direct value."""
        assert duality_gap(1.01, 1.0) == pytest.approx(0.01)
        assert duality_gap(0.0, 0.0) == 0.0


@pytest.mark.slow
class TestDuality:
    """Tests that the adjoint and direct forms agree up to discretization error."""

    def test_gap_without_wind(self):
        """Test the gap is below one percent with 200 steps and no wind."""
        assert diamond_gap((0.0, 0.0), 0.005) < 1e-2

    def test_gap_shrinks_with_dt(self):
        """Test halving dt reduces the gap."""
        assert diamond_gap((0.0, 0.0), 0.0025) < diamond_gap((0.0, 0.0), 0.005)

    def test_gap_with_wind(self):
        """Test the gap stays small under a steady crosswind."""
        assert diamond_gap((0.0, -20.0), 0.005) < 0.1

    def test_random_scenarios_within_five_percent(self):
        """Test ten seeded diamonds with random demand, controls and wind keep the gap below 5%."""
        gaps = [random_gaps(seed)[0] for seed in range(10)]

        assert max(gaps) <= 0.05, gaps

    def test_gap_shrinks_under_refinement(self):
        """Test refining the mesh and halving dt lowers the median gap of the seeded diamonds."""
        coarse, fine = zip(*(random_gaps(seed) for seed in range(10)))

        assert np.median(fine) < np.median(coarse)
        assert max(fine) <= 0.05


class TestFunctionalReport:
    """Tests for the console rendering."""

    def test_to_text(self):
        """Test present values are printed and absent ones skipped."""
        report = FunctionalReport(
            scenario="toy", command="simulate", JT=-1.5, JP=2.0, evaluations={"simulations": 1}
        )

        text = report.to_text()

        assert "JT: -1.500000e+00" in text
        assert "simulations: 1" in text
        assert "JP_direct" not in text
