"""Tests for scenario loading, validation messages and overrides."""

import json
from pathlib import Path

import pytest

from src.dispersion import TriMesh, write_plain
from src.errors import ScenarioError
from src.scenario import RELAXED_BOUNDS, load_scenario, save_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "data" / "scenarios"


def toy_data() -> dict:
    return json.loads((SCENARIOS / "toy_diamond.json").read_text(encoding="utf-8"))


def write_scenario(data: dict, path: Path) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def scenario_errors(data: dict, tmp_path: Path) -> list:
    with pytest.raises(ScenarioError) as info:
        load_scenario(write_scenario(data, tmp_path / "scenario.json"))
    return info.value.errors


class TestShippedScenarios:
    """Tests that the bundled scenarios load and build."""

    def test_toy_diamond(self):
        """Test the toy diamond loads with its fixed controls."""
        scenario = load_scenario(SCENARIOS / "toy_diamond.json")

        assert scenario.name == "toy_diamond"
        assert len(scenario.network.roads) == 4
        assert scenario.fixed_controls().alpha[1] == [[0.6], [0.4]]
        assert scenario.build_wind(scenario.build_mesh()).is_steady

    def test_toy_stackelberg(self):
        """Test the four-junction toy has no fixed controls and uniform defaults."""
        scenario = load_scenario(SCENARIOS / "toy_stackelberg.json")

        assert scenario.controls is None
        assert scenario.fixed_controls().beta[2] == [[0.5], [0.5]]

    def test_gma_like(self):
        """Test the metropolitan scenario expands its sinusoidal inflows."""
        scenario = load_scenario(SCENARIOS / "gma_like.json")

        assert len(scenario.network.roads) == 17
        assert len(scenario.network.inflows[0].f_in.times) == 49
        assert not scenario.build_wind(scenario.build_mesh()).is_steady
        assert scenario.build_discretization().steps == 6000


class TestValidationErrors:
    """Tests for the error list of invalid scenarios."""

    def test_missing_outflow_weight(self, tmp_path):
        """Test a missing eps_out is reported with its full path."""
        data = toy_data()
        del data["network"]["outflows"][0]["eps_out"]

        assert "network.outflows[0].eps_out: required" in scenario_errors(data, tmp_path)

    def test_all_schema_errors_collected(self, tmp_path):
        """Test several schema problems are reported together."""
        data = toy_data()
        del data["network"]["outflows"][0]["eps_out"]
        del data["mesh"]
        data["bogus"] = 1

        errors = scenario_errors(data, tmp_path)

        assert "mesh: required" in errors
        assert "network.outflows[0].eps_out: required" in errors
        assert any(e.startswith("bogus") for e in errors)

    def test_malformed_json(self, tmp_path):
        """Test JSON syntax errors name the line."""
        path = tmp_path / "broken.json"
        path.write_text('{"name": \n', encoding="utf-8")

        with pytest.raises(ScenarioError) as info:
            load_scenario(path)

        assert info.value.errors[0].startswith("line ")

    def test_network_violation(self, tmp_path):
        """Test topology and boundary problems carry the network prefix."""
        data = toy_data()
        data["network"]["inflows"][0]["cap_in"] = 2000.0

        errors = scenario_errors(data, tmp_path)

        assert any(e.startswith("network: entry capacity too large") for e in errors)

    def test_infeasible_beta_bounds(self, tmp_path):
        """Test bounds that exclude every stochastic column are reported."""
        data = toy_data()
        data["beta_bounds"] = [0.6, 1.0]

        errors = scenario_errors(data, tmp_path)

        assert any(e.startswith("beta_bounds: junction 2") for e in errors)

    def test_cfl_violation(self, tmp_path):
        """Test a time step above the CFL limit is reported."""
        data = toy_data()
        data["discretization"]["dt"] = 0.01
        data["discretization"]["horizon"] = 0.2

        errors = scenario_errors(data, tmp_path)

        assert any(e.startswith("discretization: CFL violated") for e in errors)

    def test_road_outside_mesh(self, tmp_path):
        """Test roads leaving the mesh are reported by road."""
        data = toy_data()
        data["mesh"]["rectangle"]["x1"] = 2.0

        errors = scenario_errors(data, tmp_path)

        assert any(e.startswith("mesh: road") for e in errors)

    def test_missing_mesh_file(self, tmp_path):
        """Test a mesh path that does not exist is reported."""
        data = toy_data()
        data["mesh"] = {"path": "nowhere.mesh"}

        assert "mesh.path: file not found: nowhere.mesh" in scenario_errors(data, tmp_path)

    def test_error_payload(self, tmp_path):
        """Test the error serializes with the validation exit code."""
        data = toy_data()
        del data["wind"]

        with pytest.raises(ScenarioError) as info:
            load_scenario(write_scenario(data, tmp_path / "scenario.json"))

        payload = info.value.to_dict()
        assert payload["exit_code"] == 2
        assert payload["error"] == "validation"
        assert payload["errors"] == ["wind: required"]


class TestScenarioFiles:
    """Tests for saving and relative paths."""

    def test_save_and_reload(self, tmp_path):
        """Test a saved scenario reloads to the same model."""
        scenario = load_scenario(SCENARIOS / "toy_diamond.json")

        reloaded = load_scenario(save_scenario(scenario, tmp_path / "copy.json"))

        assert reloaded.model_dump() == scenario.model_dump()

    def test_mesh_path_relative_to_file(self, tmp_path):
        """Test mesh files are found next to the scenario."""
        write_plain(TriMesh.rectangle(0.0, 0.0, 4.5, 3.0, 9, 6), tmp_path / "grid.mesh")
        data = toy_data()
        data["mesh"] = {"path": "grid.mesh"}

        scenario = load_scenario(write_scenario(data, tmp_path / "scenario.json"))

        assert scenario.build_mesh().n_vertices == 70


class TestOverrides:
    """Tests for CLI overrides."""

    def test_seed_reaches_every_generator(self):
        """Test an explicit seed drives the leader GA and the follower."""
        scenario = load_scenario(SCENARIOS / "toy_diamond.json").with_overrides(seed=5)

        assert scenario.seed == 5
        assert scenario.stackelberg.ga.rng_seed == 5
        assert scenario.stackelberg.follower.seed == 5
        assert scenario.stackelberg.follower.ga.rng_seed == 5

    def test_scenario_seed_is_default(self):
        """Test the scenario's own seed applies without an override."""
        scenario = load_scenario(SCENARIOS / "toy_diamond.json").with_overrides()

        assert scenario.stackelberg.ga.rng_seed == 1

    def test_relaxed_and_hybrid(self):
        """Test relaxed bounds and the hybrid follower switch."""
        scenario = load_scenario(SCENARIOS / "toy_stackelberg.json").with_overrides(
            relaxed=True, hybrid_follower=True
        )

        assert scenario.beta_bounds == RELAXED_BOUNDS
        assert scenario.fixed_controls().beta_lo == 0.2
        assert scenario.stackelberg.follower.hybrid

    def test_relaxed_rechecks_fixed_controls(self, tmp_path):
        """Test fixed beta entries valid in [0, 1] are rejected once the bounds are relaxed."""
        data = toy_data()
        data["controls"]["beta"] = {"2": [[0.1], [0.9]]}
        scenario = load_scenario(write_scenario(data, tmp_path / "scenario.json"))

        with pytest.raises(ScenarioError) as info:
            scenario.with_overrides(relaxed=True)

        assert any(e.startswith("controls: capacity out of bounds") for e in info.value.errors)
        assert scenario.with_overrides().fixed_controls().beta[2] == [[0.1], [0.9]]
