"""Trajectory files.

CSV layout (version 1)::

    # vmcs-trajectory v1 n_sites=<N> kind=<variational|exact>
    t,sx_avg,sy_avg,sz_avg,[sx_site_0..,sy_site_0..,sz_site_0..,]sum_c_drift,max_m_norm,residual

Site columns are optional.  Floats are written with 17 significant digits
so a file read back reproduces the in-memory values exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .trajectory import OBSERVABLES, Record, Trajectory

SCHEMA_VERSION = 1
MAGIC = "# vmcs-trajectory"
DIAGNOSTICS = ("sum_c_drift", "max_m_norm", "residual")


class SchemaError(ValueError):
    """A trajectory file does not follow the expected layout or version."""


def columns(n_sites: int, site_resolved: bool = True) -> list[str]:
    cols = ["t"] + [f"{o}_avg" for o in OBSERVABLES]
    if site_resolved:
        cols += [f"{o}_site_{i}" for o in OBSERVABLES for i in range(n_sites)]
    return cols + list(DIAGNOSTICS)


def _fmt(x: float) -> str:
    return repr(float(x))


def _row(record: Record, site_resolved: bool) -> list[str]:
    avg = record.sites.mean(axis=0)
    row = [_fmt(record.t)] + [_fmt(v) for v in avg]
    if site_resolved:
        row += [_fmt(v) for v in record.sites.T.reshape(-1)]
    return row + [_fmt(record.sum_c_drift), _fmt(record.max_m_norm), _fmt(record.residual)]


class TrajectoryWriter:
    """Streams records to CSV, flushing after every row."""

    def __init__(self, path, n_sites: int, site_resolved: bool = True, kind: str = "variational"):
        self.path = Path(path)
        self.site_resolved = site_resolved
        self._fh = open(self.path, "w", newline="")
        self._fh.write(f"{MAGIC} v{SCHEMA_VERSION} n_sites={n_sites} kind={kind}\n")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(columns(n_sites, site_resolved))
        self._fh.flush()

    def __call__(self, record: Record) -> None:
        self._writer.writerow(_row(record, self.site_resolved))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trajectory(path, traj: Trajectory, site_resolved: bool = True, kind: str | None = None) -> None:
    kind = kind or traj.metadata.get("kind", "variational")
    with TrajectoryWriter(path, traj.n_sites, site_resolved, kind) as w:
        for rec in traj.records():
            w(rec)


def _parse_header(line: str) -> dict:
    if not line.startswith(MAGIC):
        raise SchemaError("missing trajectory header line")
    fields = line[len(MAGIC) :].split()
    if not fields or not fields[0].startswith("v"):
        raise SchemaError("header has no schema version")
    meta = {"version": int(fields[0][1:])}
    for f in fields[1:]:
        key, _, value = f.partition("=")
        meta[key] = value
    return meta


def read_trajectory(path) -> tuple[Trajectory, dict]:
    """Load a CSV trajectory; returns it with the header fields.

    Site magnetisations are filled with the lattice average when the file
    has no site columns.

    Raises:
        SchemaError: on a missing header, an unknown version, unexpected
            columns or a time axis that does not start at zero.
    """
    with open(path, newline="") as fh:
        meta = _parse_header(fh.readline().strip())
        if meta["version"] != SCHEMA_VERSION:
            raise SchemaError(f"schema version {meta['version']} is not supported (expected {SCHEMA_VERSION})")
        reader = csv.reader(fh)
        header = next(reader)
        n = int(meta.get("n_sites", 0))
        site_resolved = header == columns(n, True)
        if not site_resolved and header != columns(n, False):
            raise SchemaError(f"unexpected columns in {path}")
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float).reshape(-1, len(header))
    meta["columns"] = header
    meta["site_resolved"] = site_resolved
    t = data[:, 0]
    if site_resolved:
        sites = data[:, 4 : 4 + 3 * n].reshape(-1, 3, n).transpose(0, 2, 1)
    else:
        sites = np.repeat(data[:, None, 1:4], max(n, 1), axis=1)
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    try:
        traj = Trajectory(t, sites, data[:, -3], data[:, -2], data[:, -1], dt, metadata={"kind": meta.get("kind")})
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return traj, meta


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "times": traj.times.tolist(),
        "sites": traj.sites.tolist(),
        "sum_c_drift": traj.sum_c_drift.tolist(),
        "max_m_norm": traj.max_m_norm.tolist(),
        "residual": traj.residual.tolist(),
        "dt": traj.dt,
        "completed": traj.completed,
        "message": traj.message,
    }


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
