from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from vmcs.cli import main
from vmcs.io import read_json, read_trajectory

DECAY = {
    "lattice": {"Lx": 1},
    "model": {"g": 0.0, "V": 0.0, "gamma": 1.0},
    "ansatz": {"direction": [0.0, 0.0, 1.0], "perturbation": 0.0},
    "integration": {"t_final": 2.0, "dt": 0.01, "record_every": 5},
}

SMALL = {
    "lattice": {"Lx": 2, "Ly": 2},
    "model": {"g": 2.0, "V": 2.0, "gamma": 1.0},
    "ansatz": {"N_c": 3, "perturbation": 0.3, "seed": 2},
    "integration": {"t_final": 0.5, "dt": 0.01, "record_every": 5},
}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", _write(tmp_path, DECAY), "--out", str(out)]) == 0
    for name in ("trajectory.csv", "steady_state.json", "manifest.json", "final_state.json"):
        assert (out / name).exists()
    traj, meta = read_trajectory(out / "trajectory.csv")
    assert meta["kind"] == "variational"
    np.testing.assert_allclose(traj.averages[:, 2], 2 * np.exp(-traj.times) - 1, atol=1e-6)
    man = read_json(out / "manifest.json")
    assert man["status"] == "ok" and man["config"]["model"]["gamma"] == 1.0
    assert {"code_version", "wall_time_s", "python", "numpy"} <= set(man)


def test_exact_engine_matches_analytic_decay(tmp_path):
    out = tmp_path / "ex"
    assert main(["exact", "--config", _write(tmp_path, DECAY), "--out", str(out)]) == 0
    traj, meta = read_trajectory(out / "trajectory.csv")
    assert meta["kind"] == "exact"
    np.testing.assert_allclose(traj.averages[:, 2], 2 * np.exp(-traj.times) - 1, atol=1e-8)


def test_missing_field_exit_code(tmp_path, capsys):
    cfg = {"lattice": {"Lx": 3}, "model": {"g": 1.0, "V": 2.0}}
    assert main(["simulate", "--config", _write(tmp_path, cfg)]) == 1
    assert "model.gamma" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path, capsys):
    cfg = {**DECAY, "integration": {**DECAY["integration"], "step": 0.1}}
    assert main(["simulate", "--config", _write(tmp_path, cfg)]) == 1
    assert "integration.step" in capsys.readouterr().err


def test_oversized_step_exits_two(tmp_path, capsys):
    cfg = {
        "lattice": {"Lx": 3, "Ly": 3},
        "model": {"g": 2.0, "V": 2.0, "gamma": 1.0},
        "ansatz": {"N_c": 2, "perturbation": 0.3},
        "integration": {"t_final": 10.0, "dt": 1.0, "record_every": 1},
    }
    out = tmp_path / "big"
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 2
    assert "trace drift" in capsys.readouterr().err
    assert "numerical failure" in read_json(out / "manifest.json")["status"]
    # the partial trajectory is on disk
    assert read_trajectory(out / "trajectory.csv")[0].n_records >= 1


def test_exact_refuses_large_lattice(tmp_path, capsys):
    cfg = {**SMALL, "lattice": {"Lx": 8, "Ly": 8}}
    assert main(["exact", "--config", _write(tmp_path, cfg)]) == 1
    assert "10 sites" in capsys.readouterr().err


def test_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("VMCS_THREADS", "1")
    cfg = {**DECAY, "integration": {"t_final": 20.0, "dt": 0.02, "record_every": 10}}
    out = tmp_path / "sw"
    code = main(["sweep", "--config", _write(tmp_path, cfg), "--param", "gamma", "--values", "1", "2", "--out", str(out)])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "value,sx_ss,sy_ss,sz_ss,converged,status"
    rows = [ln.split(",") for ln in lines[1:]]
    assert [r[0] for r in rows] == ["1.0", "2.0"]
    assert all(float(r[3]) == pytest.approx(-1.0, abs=1e-6) and r[4] == "true" for r in rows)
    assert (out / "point_001" / "manifest.json").exists()


def test_sweep_seeds_per_point(tmp_path, monkeypatch):
    monkeypatch.setenv("VMCS_THREADS", "1")
    out = tmp_path / "sw"
    cfg = {**SMALL, "integration": {"t_final": 0.1, "dt": 0.01, "record_every": 1}}
    main(["sweep", "--config", _write(tmp_path, cfg), "--param", "g", "--values", "1", "2", "--out", str(out)])
    seeds = [read_json(out / f"point_{i:03d}" / "manifest.json")["config"]["ansatz"]["seed"] for i in range(2)]
    assert seeds == [2, 3]


def test_sweep_failure_is_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv("VMCS_THREADS", "1")
    cfg = {**SMALL, "lattice": {"Lx": 3, "Ly": 3}, "integration": {"t_final": 20.0, "dt": 1.0, "record_every": 1}}
    out = tmp_path / "sw"
    assert main(["sweep", "--config", _write(tmp_path, cfg), "--param", "g", "--values", "2", "--out", str(out)]) == 0
    row = (out / "sweep.csv").read_text().splitlines()[1].split(",")
    assert row[4] == "false" and "trace drift" in row[5]


def test_sweep_empty_values(tmp_path):
    assert main(["sweep", "--config", _write(tmp_path, DECAY), "--param", "g", "--values"]) == 1


def test_compare(tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    cfg = _write(tmp_path, DECAY)
    main(["simulate", "--config", cfg, "--out", str(a)])
    main(["exact", "--config", cfg, "--out", str(b)])
    assert main(["compare", str(a / "trajectory.csv"), str(a / "trajectory.csv"), "--out", str(tmp_path)]) == 0
    assert read_json(tmp_path / "compare.json")["max_deviation"] == 0.0
    assert main(["compare", str(a / "trajectory.csv"), str(b / "trajectory.csv"), "--tol", "1e-6"]) == 0
    assert main(["compare", str(a / "trajectory.csv"), str(b / "trajectory.csv"), "--tol", "1e-14"]) == 1


def test_compare_disjoint_ranges(tmp_path):
    early = _write(tmp_path, {**DECAY, "integration": {"t_final": 1.0, "dt": 0.1, "record_every": 1}}, "e.json")
    main(["exact", "--config", early, "--out", str(tmp_path / "e")])
    text = (tmp_path / "e" / "trajectory.csv").read_text().splitlines()
    shifted = text[:2] + [",".join([repr(float(r.split(",")[0]) + 5.0)] + r.split(",")[1:]) for r in text[2:]]
    (tmp_path / "late.csv").write_text("\n".join(shifted) + "\n")
    assert main(["compare", str(tmp_path / "e" / "trajectory.csv"), str(tmp_path / "late.csv")]) == 1
    # a lone t = 0 record overlaps nothing
    (tmp_path / "point.csv").write_text("\n".join(text[:3]) + "\n")
    assert main(["compare", str(tmp_path / "e" / "trajectory.csv"), str(tmp_path / "point.csv")]) == 1


def test_compare_schema_mismatch(tmp_path):
    one = tmp_path / "one"
    main(["exact", "--config", _write(tmp_path, DECAY), "--out", str(one)])
    two = tmp_path / "two"
    main(["exact", "--config", _write(tmp_path, {**SMALL, "integration": {"t_final": 0.1, "dt": 0.01}}, "s.json"), "--out", str(two)])
    assert main(["compare", str(one / "trajectory.csv"), str(two / "trajectory.csv")]) == 1


def test_manifest_rerun_is_bit_identical(tmp_path):
    first = tmp_path / "first"
    assert main(["simulate", "--config", _write(tmp_path, SMALL), "--out", str(first)]) == 0
    second = tmp_path / "second"
    assert main(["simulate", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()


def test_json_output_format(tmp_path):
    cfg = {**DECAY, "output": {"format": "json"}}
    out = tmp_path / "j"
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    data = read_json(out / "trajectory.json")
    assert len(data["times"]) == 41


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vmcs.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("vmcs ")
