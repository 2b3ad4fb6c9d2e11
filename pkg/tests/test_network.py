"""Unit tests for the road network model, validation and builders."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import ConfigurationError, DomainError
from src.network import (
    BoundaryOutflow,
    ControlSet,
    FundamentalDiagram,
    Junction,
    Network,
    Road,
    TimeSeries,
    check_beta_bounds,
    check_controls,
    closed_loop,
    demand,
    diamond,
    flux,
    single_road,
    supply,
    validate_network,
)


class TestFundamentalDiagram:
    """Tests for flux, demand and supply."""

    def test_greenshields_values(self):
        """Test Greenshields flux, capacity, demand and supply."""
        fd = FundamentalDiagram(v_free=60.0, rho_max=120.0)

        assert fd.capacity == pytest.approx(1800.0)
        assert flux(fd, 60.0) == pytest.approx(1800.0)
        assert demand(fd, 30.0) == pytest.approx(1350.0)
        assert demand(fd, 90.0) == pytest.approx(1800.0)
        assert supply(fd, 30.0) == pytest.approx(1800.0)
        assert supply(fd, 90.0) == pytest.approx(1350.0)

    def test_triangular_values(self):
        """Test triangular flux on both branches."""
        fd = FundamentalDiagram(family="triangular", v_free=60.0, rho_max=120.0, rho_crit=30.0)

        assert fd.capacity == pytest.approx(1800.0)
        assert flux(fd, 15.0) == pytest.approx(900.0)
        assert flux(fd, 75.0) == pytest.approx(900.0)
        assert flux(fd, 120.0) == pytest.approx(0.0)
        assert fd.max_wave_speed == pytest.approx(60.0)

    def test_vectorized(self):
        """Test array arguments return arrays of the same shape."""
        fd = FundamentalDiagram()
        rho = np.array([0.0, 60.0, 120.0])

        np.testing.assert_allclose(flux(fd, rho), [0.0, 1800.0, 0.0])

    def test_demand_supply_bound_flux(self):
        """Test min(D, S) equals the flux everywhere."""
        fd = FundamentalDiagram()
        rho = np.linspace(0.0, 120.0, 25)

        np.testing.assert_allclose(np.minimum(demand(fd, rho), supply(fd, rho)), flux(fd, rho))

    def test_density_outside_domain(self):
        """Test negative or jammed-beyond densities are rejected."""
        fd = FundamentalDiagram()

        with pytest.raises(DomainError):
            flux(fd, -1.0)
        with pytest.raises(ValueError):
            demand(fd, 121.0)

    def test_triangular_needs_critical_density(self):
        """Test a triangular diagram without rho_crit is invalid."""
        with pytest.raises(ValidationError):
            FundamentalDiagram(family="triangular")


class TestTimeSeries:
    """Tests for piecewise-linear boundary data."""

    def test_constant_shorthand(self):
        """Test a bare number becomes a constant series."""
        series = TimeSeries.model_validate(5.0)

        assert series(0.0) == 5.0
        assert series(100.0) == 5.0

    def test_linear_interpolation(self):
        """Test values between samples are interpolated."""
        series = TimeSeries(times=[0.0, 2.0], values=[0.0, 10.0])

        assert series(1.0) == pytest.approx(5.0)
        assert series(3.0) == pytest.approx(10.0)

    def test_sinusoid_shorthand(self):
        """Test the sinusoid generator expands into samples."""
        series = TimeSeries.model_validate(
            {"sinusoid": {"mean": 100.0, "amplitude": 20.0, "period": 24.0, "samples": 25}}
        )

        assert len(series.times) == 25
        assert series(0.0) == pytest.approx(100.0)
        assert series(6.0) == pytest.approx(120.0)

    def test_times_must_increase(self):
        """Test non-increasing sample times are rejected."""
        with pytest.raises(ValidationError):
            TimeSeries(times=[0.0, 0.0], values=[1.0, 2.0])


class TestRoad:
    """Tests for road geometry."""

    def test_polyline_length_and_points(self):
        """Test arc length and point lookup along a bent road."""
        road = Road(id=1, polyline=[(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)])

        assert road.length == pytest.approx(7.0)
        np.testing.assert_allclose(road.point_at(5.0), [3.0, 2.0])

    def test_zero_length_segment(self):
        """Test repeated polyline vertices are rejected."""
        with pytest.raises(ValidationError):
            Road(id=1, polyline=[(0.0, 0.0), (0.0, 0.0)])

    def test_from_points_drops_repeats(self):
        """Test from_points removes repeated vertices."""
        road = Road.from_points(1, [(0, 0), (0, 0), (1, 0)])

        assert road.polyline == [(0.0, 0.0), (1.0, 0.0)]


class TestValidateNetwork:
    """Tests for topology and boundary validation."""

    def test_builders_are_valid(self):
        """Test every builder network passes validation."""
        for net in (single_road(), closed_loop(), diamond(), diamond(four_junctions=True)):
            report = validate_network(net)
            assert report.ok, report.violations

    def test_dangling_endpoint(self):
        """Test a road whose end is attached to nothing is reported."""
        net = single_road()
        broken = Network(roads=net.roads, inflows=net.inflows)

        report = validate_network(broken)

        assert "dangling endpoint" in report.codes()

    def test_unknown_road(self):
        """Test references to missing roads are reported."""
        net = single_road()
        broken = Network(
            roads=net.roads,
            inflows=net.inflows,
            outflows=net.outflows + [BoundaryOutflow(road=9, f_out=TimeSeries.constant(1.0), eps_out=0.5)],
        )

        assert "unknown road" in validate_network(broken).codes()

    def test_entry_capacity_above_road_capacity(self):
        """Test cap_in larger than the road capacity is reported."""
        net = single_road(cap_in=2000.0)

        assert "entry capacity too large" in validate_network(net).codes()

    def test_initial_density_out_of_range(self):
        """Test rho0 above rho_max is reported."""
        net = single_road(rho0=150.0)

        assert "initial density out of range" in validate_network(net).codes()

    def test_road_attached_twice(self):
        """Test a road leaving two junctions is reported."""
        net = closed_loop()
        broken = Network(
            roads=net.roads,
            junctions=net.junctions + [Junction(id=3, incoming=[2], outgoing=[1])],
        )

        assert "road multiply attached" in validate_network(broken).codes()


class TestControls:
    """Tests for control sets and their checks."""

    def test_permissive_controls_are_feasible(self):
        """Test the uniform split satisfies every control constraint."""
        net = diamond(four_junctions=True)
        controls = ControlSet.permissive(net)

        assert check_controls(net, controls) == []
        assert controls.check(net) == []

    def test_forced_matrices(self):
        """Test single-outgoing junctions default to alpha = 1."""
        net = diamond()
        controls = ControlSet(alpha={1: [[0.3], [0.7]]}, beta={2: [[0.5], [0.5]]})
        merge = net.junction(2)

        np.testing.assert_allclose(controls.alpha_matrix(merge), [[1.0, 1.0]])

    def test_missing_alpha_raises(self):
        """Test a free junction without alpha is an error."""
        net = diamond()

        with pytest.raises(ConfigurationError):
            ControlSet().alpha_matrix(net.junction(1))

    def test_column_not_stochastic(self):
        """Test alpha columns must sum to one."""
        net = diamond()
        controls = ControlSet(alpha={1: [[0.3], [0.3]]}, beta={2: [[0.5], [0.5]]})

        codes = [v.code for v in check_controls(net, controls)]

        assert "preference row not stochastic" in codes

    def test_beta_outside_bounds(self):
        """Test free beta entries must respect [beta_lo, beta_hi]."""
        net = diamond()
        controls = ControlSet(
            alpha={1: [[0.5], [0.5]]}, beta={2: [[0.1], [0.9]]}, beta_lo=0.2, beta_hi=0.8
        )

        codes = [v.code for v in check_controls(net, controls)]

        assert codes == ["capacity out of bounds"]

    def test_infeasible_beta_bounds(self):
        """Test bounds that exclude every stochastic column are reported per junction."""
        net = diamond()

        assert check_beta_bounds(net, 0.2, 0.8) == []
        problems = check_beta_bounds(net, 0.6, 1.0)
        assert len(problems) == 1
        assert problems[0].startswith("junction 2")


class TestBuilders:
    """Tests for the synthetic network builders."""

    def test_diamond_four_junctions(self):
        """Test the four-junction diamond has roads 0..5 and junctions 0..3."""
        net = diamond(four_junctions=True)

        assert net.road_ids == [0, 1, 2, 3, 4, 5]
        assert sorted(j.id for j in net.junctions) == [0, 1, 2, 3]
        assert net.inflows[0].road == 0
        assert net.outflows[0].road == 5

    def test_closed_loop_has_no_boundary(self):
        """Test the closed loop has neither inflows nor outflows."""
        net = closed_loop()

        assert net.inflows == []
        assert net.outflows == []
        assert net.road(1).length == pytest.approx(2.0)
