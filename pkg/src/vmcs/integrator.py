"""Fixed-step RK4 time evolution of the variational parameters."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .ansatz import DegenerateStateError, VariationalState, renormalize
from .eom import EomConfig, SolveError, theta_dot
from .kernels import ModelParams
from .lattice import LatticeSpec, SymmetryGroup, identity_group
from .observables import all_magnetizations
from .trajectory import OBSERVABLES, Record, Recorder, Trajectory, step_count

logger = logging.getLogger(__name__)

MAX_TRACE_DRIFT = 1e-2
NORM_WARNING = 1.0 + 1e-3


class NumericalFailure(RuntimeError):
    """The run was aborted; ``trajectory`` holds everything recorded so far."""

    def __init__(self, message: str, trajectory: Trajectory | None = None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class StepInfo:
    """Diagnostics of one RK4 step.

    ``sum_c_drift`` is ``|sum(c) - 1|`` before renormalisation and
    ``residual`` the worst stage value of ``|(T + shift) x - F| / max(|F|, 1)``.
    """

    sum_c_drift: float
    residual: float
    escalations: int


def _velocity(state, model, lattice, group, config):
    x, info = theta_dot(state, model, lattice, group, config)
    return x, info.residual / max(info.force_norm, 1.0), info.escalations


def rk4_step_with_info(
    state: VariationalState,
    model: ModelParams,
    lattice: LatticeSpec,
    group: SymmetryGroup | None,
    dt: float,
    config: EomConfig = EomConfig(),
) -> tuple[VariationalState, StepInfo]:
    if not dt > 0:
        raise ValueError("dt must be positive")
    theta = state.to_vector()
    k1, r1, e1 = _velocity(state, model, lattice, group, config)
    k2, r2, e2 = _velocity(state.with_vector(theta + 0.5 * dt * k1), model, lattice, group, config)
    k3, r3, e3 = _velocity(state.with_vector(theta + 0.5 * dt * k2), model, lattice, group, config)
    k4, r4, e4 = _velocity(state.with_vector(theta + dt * k3), model, lattice, group, config)
    new = state.with_vector(theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    drift = abs(float(new.c.sum()) - 1.0)
    info = StepInfo(drift, max(r1, r2, r3, r4), e1 + e2 + e3 + e4)
    if not new.is_finite():
        return new, info
    return renormalize(new), info


def rk4_step(state, model, lattice, group, dt, config: EomConfig = EomConfig()) -> VariationalState:
    """One classical RK4 step followed by renormalisation of ``c``."""
    return rk4_step_with_info(state, model, lattice, group, dt, config)[0]


def run_dynamics(
    initial: VariationalState,
    model: ModelParams,
    lattice: LatticeSpec,
    group: SymmetryGroup | None,
    t_final: float,
    dt: float,
    record_every: int = 1,
    eom_config: EomConfig = EomConfig(),
    on_record=None,
    max_trace_drift: float = MAX_TRACE_DRIFT,
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_final`` and record observables.

    ``on_record`` is called with every :class:`Record` as soon as it is
    taken, which lets callers stream rows to disk.

    Raises:
        NumericalFailure: if a parameter becomes non-finite, the trace drift
            of a single step exceeds ``max_trace_drift``, or the linear solve
            fails.  The exception carries the partial trajectory.
    """
    if group is None:
        group = identity_group(initial.n_sites)
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    n_steps = step_count(t_final, dt)
    recorder = Recorder(on_record)
    state = initial
    worst_drift = worst_residual = 0.0
    warned = False

    def record(step):
        nonlocal worst_drift, worst_residual
        sites = all_magnetizations(state, group)
        recorder.add(Record(step * dt, sites, worst_drift, state.max_bloch_norm(), worst_residual))
        worst_drift = worst_residual = 0.0

    def fail(step, message):
        logger.error(message)
        traj = recorder.build(dt, completed=False, message=message, metadata={"failed_step": step})
        return NumericalFailure(message, traj)

    record(0)
    for step in range(1, n_steps + 1):
        try:
            new, info = rk4_step_with_info(state, model, lattice, group, dt, eom_config)
        except (SolveError, DegenerateStateError) as exc:
            raise fail(step, f"step {step} (t={step * dt:g}): {exc}") from exc
        if not new.is_finite():
            raise fail(step, f"non-finite parameters at step {step} (t={step * dt:g})")
        if info.sum_c_drift > max_trace_drift:
            raise fail(
                step,
                f"trace drift |sum(c) - 1| = {info.sum_c_drift:.3e} at step {step} (t={step * dt:g}) "
                f"exceeds {max_trace_drift:g}; reduce dt",
            )
        state = new
        worst_drift = max(worst_drift, info.sum_c_drift)
        worst_residual = max(worst_residual, info.residual)
        if not warned and state.max_bloch_norm() > NORM_WARNING:
            warnings.warn(f"Bloch norm {state.max_bloch_norm():.4f} exceeds 1 at t={step * dt:g}", RuntimeWarning)
            warned = True
        if step % record_every == 0 or step == n_steps:
            record(step)
    return recorder.build(dt, metadata={"kind": "variational", "final_state": state})


@dataclass(frozen=True)
class SteadyState:
    mean: dict
    std: dict
    drift: dict
    converged: bool
    t_start: float
    n_tail: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "drift": self.drift,
            "converged": self.converged,
            "t_start": self.t_start,
            "n_tail": self.n_tail,
        }


STD_TOL = 1e-3
DRIFT_TOL = 1e-3
MIN_TAIL_RECORDS = 10


def extract_steady_state(traj: Trajectory, tail_fraction: float = 0.2) -> SteadyState:
    """Tail statistics of the lattice-averaged magnetisations.

    The tail is the last ``ceil(tail_fraction * n_records)`` records.  The
    drift of an observable is the slope of a least-squares line through the
    tail times the tail duration.  The state counts as converged when every
    tail standard deviation and every drift is below ``1e-3``.

    Raises:
        ValueError: for ``tail_fraction`` outside ``(0, 0.5]`` or fewer than
            ten records in the tail.
    """
    if not 0 < tail_fraction <= 0.5:
        raise ValueError("tail_fraction must lie in (0, 0.5]")
    n_tail = int(np.ceil(tail_fraction * traj.n_records - 1e-9))
    if n_tail < MIN_TAIL_RECORDS:
        raise ValueError(f"tail has {n_tail} records, need at least {MIN_TAIL_RECORDS}")
    t = traj.times[-n_tail:]
    avg = traj.averages[-n_tail:]
    span = t[-1] - t[0]
    mean, std, drift = {}, {}, {}
    for a, name in enumerate(OBSERVABLES):
        y = avg[:, a]
        mean[name] = float(y.mean())
        std[name] = float(y.std())
        slope = np.polyfit(t, y, 1)[0] if span > 0 else 0.0
        drift[name] = float(slope * span)
    converged = all(std[k] < STD_TOL and abs(drift[k]) < DRIFT_TOL for k in OBSERVABLES)
    return SteadyState(mean, std, drift, converged, float(t[0]), n_tail)
