from __future__ import annotations

import json

import numpy as np
import pytest

from vmcs.config import ConfigError, load_config, parse_config
from vmcs.io import SchemaError, TrajectoryWriter, columns, read_trajectory, write_trajectory
from vmcs.trajectory import Record, Trajectory

BASE = {"lattice": {"Lx": 3, "Ly": 3}, "model": {"g": 2.0, "V": 2.0, "gamma": 1.0}}


def _traj(n_sites=2, n=6):
    rng = np.random.default_rng(0)
    t = np.arange(n) * 0.1
    return Trajectory(t, rng.uniform(-1, 1, (n, n_sites, 3)), rng.random(n) * 1e-8, rng.random(n), rng.random(n) * 1e-12, 0.1)


def test_column_layout():
    assert columns(2) == [
        "t", "sx_avg", "sy_avg", "sz_avg",
        "sx_site_0", "sx_site_1", "sy_site_0", "sy_site_1", "sz_site_0", "sz_site_1",
        "sum_c_drift", "max_m_norm", "residual",
    ]  # fmt: skip
    assert columns(5, site_resolved=False) == ["t", "sx_avg", "sy_avg", "sz_avg", "sum_c_drift", "max_m_norm", "residual"]


@pytest.mark.parametrize("site_resolved", [True, False])
def test_csv_round_trip_is_exact(tmp_path, site_resolved):
    traj = _traj()
    write_trajectory(tmp_path / "a.csv", traj, site_resolved=site_resolved, kind="exact")
    back, meta = read_trajectory(tmp_path / "a.csv")
    assert meta["version"] == 1 and meta["kind"] == "exact" and meta["site_resolved"] == site_resolved
    assert back.times.tobytes() == traj.times.tobytes()
    assert back.averages.tobytes() == traj.averages.tobytes() or np.array_equal(back.averages, traj.averages)
    assert back.sum_c_drift.tobytes() == traj.sum_c_drift.tobytes()
    if site_resolved:
        assert back.sites.tobytes() == traj.sites.tobytes()


def test_writer_streams_rows(tmp_path):
    path = tmp_path / "s.csv"
    with TrajectoryWriter(path, 1) as w:
        w(Record(0.0, np.zeros((1, 3)), 0.0, 1.0, 0.0))
        assert len(path.read_text().splitlines()) == 3  # header, columns, first row
        w(Record(0.1, np.ones((1, 3)), 0.0, 1.0, 0.0))
    assert len(path.read_text().splitlines()) == 4


def test_reader_rejects_foreign_files(tmp_path):
    (tmp_path / "x.csv").write_text("t,a\n0,1\n")
    with pytest.raises(SchemaError):
        read_trajectory(tmp_path / "x.csv")
    write_trajectory(tmp_path / "v.csv", _traj())
    text = (tmp_path / "v.csv").read_text().replace("v1", "v9", 1)
    (tmp_path / "v.csv").write_text(text)
    with pytest.raises(SchemaError):
        read_trajectory(tmp_path / "v.csv")


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.1, 0.2]), np.zeros((2, 1, 3)), np.zeros(2), np.zeros(2), np.zeros(2), 0.1)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1, 3)), np.zeros(2), np.zeros(2), np.zeros(2), 0.1)


# -- configuration -------------------------------------------------------------------


def test_defaults_are_filled():
    cfg = parse_config(BASE)
    assert cfg.lattice.periodic and cfg.ansatz.N_c == 1 and cfg.ansatz.symmetrize
    assert cfg.integration.dt == 0.01 and cfg.integration.tail_fraction == 0.2
    assert cfg.eom.epsilon == 1e-10 and cfg.eom.gradient_mode == "closed_form"
    assert cfg.output.format == "csv"
    assert parse_config(cfg.to_dict()) == cfg


@pytest.mark.parametrize(
    "patch,path",
    [
        ({"model": {"g": 1.0, "V": 2.0}}, "model.gamma"),
        ({"lattice": {"Lx": 3, "Lz": 2}}, "lattice.Lz"),
        ({"extra": 1}, "extra"),
        ({"eom": {"epsilon": 1e-3}}, "eom.epsilon"),
        ({"integration": {"dt": -0.1}}, "integration.dt"),
        ({"ansatz": {"N_c": 0}}, "ansatz.N_c"),
        ({"model": {"g": 1.0, "V": 2.0, "gamma": -1.0}}, "model.gamma"),
    ],
)
def test_errors_carry_field_path(patch, path):
    data = {**BASE, **patch}
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        parse_config(data)


def test_missing_section_path():
    with pytest.raises(ConfigError, match="model"):
        parse_config({"lattice": {"Lx": 3}})


def test_direction_must_be_unit():
    with pytest.raises(ConfigError, match="direction"):
        parse_config({**BASE, "ansatz": {"direction": [1.0, 1.0, 0.0]}})


def test_load_from_manifest(tmp_path):
    cfg = parse_config(BASE)
    (tmp_path / "m.json").write_text(json.dumps({"vmcs_manifest": 1, "config": cfg.to_dict()}))
    assert load_config(tmp_path / "m.json") == cfg


def test_load_reports_bad_json(tmp_path):
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_replace_section():
    cfg = parse_config(BASE).replace("model", g=3.0)
    assert cfg.model.g == 3.0 and cfg.model.V == 2.0
