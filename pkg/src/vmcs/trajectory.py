"""Time series of observables shared by the variational engine and the exact oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

OBSERVABLES = ("sx", "sy", "sz")


def step_count(t_final: float, dt: float) -> int:
    """Number of fixed steps of size ``dt`` that land exactly on ``t_final``."""
    if not t_final > 0 or not dt > 0:
        raise ValueError("t_final and dt must be positive")
    n = int(round(t_final / dt))
    if n < 1 or abs(n * dt - t_final) > 1e-9 * max(t_final, 1.0):
        raise ValueError(f"t_final={t_final} is not a whole number of steps of dt={dt}")
    return n


@dataclass(frozen=True)
class Record:
    """One recorded time.

    ``sum_c_drift`` and ``residual`` are the worst values over all steps since
    the previous record, so per-step bounds can be checked from the records.
    For oracle runs the three diagnostics hold the trace error, the largest
    single-site Bloch norm and the Hermiticity error of the density matrix.
    """

    t: float
    sites: np.ndarray
    sum_c_drift: float
    max_m_norm: float
    residual: float


@dataclass
class Trajectory:
    times: np.ndarray
    sites: np.ndarray  # (n_records, n_sites, 3)
    sum_c_drift: np.ndarray
    max_m_norm: np.ndarray
    residual: np.ndarray
    dt: float
    completed: bool = True
    message: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size and t[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def n_records(self) -> int:
        return len(self.times)

    @property
    def n_sites(self) -> int:
        return self.sites.shape[1]

    @property
    def averages(self) -> np.ndarray:
        return self.sites.mean(axis=1)

    def observable(self, name: str) -> np.ndarray:
        """Lattice average ``sx``/``sy``/``sz`` (``_avg`` suffix optional)."""
        return self.averages[:, OBSERVABLES.index(name.removesuffix("_avg"))]

    def records(self):
        for t, s, a, b, c in zip(self.times, self.sites, self.sum_c_drift, self.max_m_norm, self.residual):
            yield Record(float(t), s, float(a), float(b), float(c))


class Recorder:
    """Accumulates records and forwards each one to an optional callback."""

    def __init__(self, on_record: Callable[[Record], None] | None = None):
        self._rows: list[Record] = []
        self._on_record = on_record

    def __len__(self) -> int:
        return len(self._rows)

    def add(self, record: Record) -> None:
        self._rows.append(record)
        if self._on_record is not None:
            self._on_record(record)

    def build(self, dt: float, completed: bool = True, message: str = "", metadata: dict | None = None) -> Trajectory:
        rows = self._rows
        n = rows[0].sites.shape[0] if rows else 0
        return Trajectory(
            times=np.array([r.t for r in rows]),
            sites=np.array([r.sites for r in rows]).reshape(len(rows), n, 3),
            sum_c_drift=np.array([r.sum_c_drift for r in rows]),
            max_m_norm=np.array([r.max_m_norm for r in rows]),
            residual=np.array([r.residual for r in rows]),
            dt=dt,
            completed=completed,
            message=message,
            metadata=dict(metadata or {}),
        )
