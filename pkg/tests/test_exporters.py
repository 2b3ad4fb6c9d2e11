"""Tests for artifact writers and the adjoint cache."""

import numpy as np
import pandas as pd
import pytest

from src.dispersion import PollutionParams, ScalarFieldSeries, TriMesh, WindField
from src.errors import ConfigurationError
from src.exporters import (
    adjoint_cache_key,
    controls_frame,
    load_adjoint_cache,
    read_report,
    save_adjoint_cache,
    trajectory_frame,
    write_comparison,
    write_field_vtk,
    write_json,
)
from src.functionals import FunctionalReport
from src.network import ControlSet, diamond
from src.traffic import Discretization, simulate


def small_series(steps: int = 5, name: str = "phi") -> ScalarFieldSeries:
    mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)
    times = np.linspace(0.0, 0.1 * steps, steps + 1)
    values = np.outer(times, np.ones(mesh.n_vertices))
    return ScalarFieldSeries(times=times, values=values, name=name)


class TestComparison:
    """Tests for the comparison table."""

    def test_sorted_by_pollution(self, tmp_path):
        """Test rows are ordered by J_P with ties kept in input order."""
        reports = [
            FunctionalReport(scenario="s", command="simulate", case="a", JT=1.0, JP=3.0),
            FunctionalReport(scenario="s", command="follower", case="b", JT=2.0, JP=1.0),
            FunctionalReport(scenario="s", command="stackelberg", case="c", JT=3.0, JP=3.0),
        ]

        frame = write_comparison(reports, tmp_path / "comparison.csv")

        assert list(frame["case"]) == ["b", "a", "c"]
        assert list(pd.read_csv(tmp_path / "comparison.csv").columns) == ["case", "scenario", "command", "JT", "JP"]

    def test_case_defaults_to_command(self, tmp_path):
        """Test unlabeled runs are listed under their command."""
        frame = write_comparison(
            [FunctionalReport(scenario="s", command="follower", JP=1.0)], tmp_path / "comparison.csv"
        )

        assert frame["case"][0] == "follower"

    def test_report_round_trip_and_error(self, tmp_path):
        """Test functionals.json reloads and a broken file is a configuration error."""
        report = FunctionalReport(scenario="s", command="simulate", JT=1.0, JP=2.0, wall_time=3.0)
        path = write_json(report, tmp_path / "functionals.json", exclude={"wall_time"})

        assert read_report(path).wall_time is None
        (tmp_path / "bad.json").write_text("{", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_report(tmp_path / "bad.json")


class TestAdjointCache:
    """Tests for the cache key and the npz store."""

    def setup_method(self):
        self.mesh = TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2)
        self.wind = WindField.constant(self.mesh, 1.0, 0.0)
        self.disc = Discretization(dt=0.1, steps=5, horizon=0.5, cells={}, ds={})

    def test_key_tracks_adjoint_inputs(self):
        """Test the key changes with mu or dt but not with the initial concentration."""
        base = adjoint_cache_key(self.mesh, self.wind, PollutionParams(), self.disc, 1)

        assert base == adjoint_cache_key(self.mesh, self.wind, PollutionParams(phi0=4.0), self.disc, 1)
        assert base != adjoint_cache_key(self.mesh, self.wind, PollutionParams(mu=1e-6), self.disc, 1)
        assert base != adjoint_cache_key(self.mesh, self.wind, PollutionParams(), self.disc, 2)
        other = Discretization(dt=0.05, steps=10, horizon=0.5, cells={}, ds={})
        assert base != adjoint_cache_key(self.mesh, self.wind, PollutionParams(), other, 1)

    def test_hit_and_miss(self, tmp_path):
        """Test the stored field comes back only for its own key."""
        g = small_series(name="g")
        path = save_adjoint_cache(g, "abc", tmp_path / "cache.npz")

        loaded = load_adjoint_cache("abc", path)

        assert np.array_equal(loaded.values, g.values)
        assert load_adjoint_cache("other", path) is None
        assert load_adjoint_cache("abc", tmp_path / "missing.npz") is None

    def test_corrupt_file_ignored(self, tmp_path):
        """Test an unreadable cache file is treated as a miss."""
        path = tmp_path / "cache.npz"
        path.write_bytes(b"not an archive")

        assert load_adjoint_cache("abc", path) is None


class TestTables:
    """Tests for the trajectory and control tables."""

    def test_trajectory_columns(self):
        """Test cell indices restart on each road."""
        net = diamond()
        disc = Discretization.build(net, horizon=0.05, cell_size=0.5, dt=0.005)
        traj = simulate(net, ControlSet.permissive(net), disc)

        frame = trajectory_frame(traj)

        first = frame[frame["n"] == 0]
        assert len(first) == sum(disc.cells.values())
        for road, cells in disc.cells.items():
            assert list(first.loc[first["road"] == road, "cell"]) == list(range(cells))

    def test_controls_rows(self):
        """Test one row per incoming/outgoing pair."""
        net = diamond()

        frame = controls_frame(ControlSet.permissive(net), net)

        assert len(frame) == 4
        split = frame[frame["junction"] == 1]
        assert split["alpha"].sum() == pytest.approx(1.0)


class TestFieldSnapshots:
    """Tests for the VTK writer."""

    def test_stride_keeps_last_step(self, tmp_path):
        """Test snapshots follow the stride and always include the final step."""
        files = write_field_vtk(TriMesh.rectangle(0.0, 0.0, 1.0, 1.0, 2, 2), small_series(), tmp_path, stride=2)

        names = {f.name for f in files}
        assert {"phi_000000.vtk", "phi_000002.vtk", "phi_000004.vtk", "phi_000005.vtk", "phi_mean.vtk"} <= names
        index = pd.read_csv(tmp_path / "phi_series.csv")
        assert list(index["n"]) == [0, 2, 4, 5]
