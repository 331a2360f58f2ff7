"""Brute-force Lindblad integration for small lattices.

The density matrix of ``N`` spins is held as a complex tensor with ``2N``
axes of length two: ket axes ``0..N-1`` followed by bra axes ``N..2N-1``.
Index 0 is spin up (``sigma^z = +1``).  The generator

    d rho/dt = -i [H, rho] + gamma sum_i (s-_i rho s+_i - {s+_i s-_i, rho} / 2)
    H        = (g/2) sum_i X_i + (V / 2 chi) sum_<ij> Z_i Z_j

is applied without building any operator: everything diagonal in the
computational basis (the ZZ energies and the anticommutator) is a
precomputed elementwise factor, ``X_i`` is a flip along one axis and the
jump term is a slice copy.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .ansatz import VariationalState
from .kernels import ModelParams
from .lattice import LatticeSpec, SymmetryGroup, identity_group
from .trajectory import Record, Recorder, Trajectory, step_count

MAX_EXACT_SITES = 10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |down><up|
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class OracleSizeError(ValueError):
    """The lattice is too large for a dense density matrix."""


def _check_size(n: int) -> None:
    if n > MAX_EXACT_SITES:
        raise OracleSizeError(f"exact oracle is limited to {MAX_EXACT_SITES} sites, got {n}")


class LindbladGenerator:
    """Matrix-free Lindblad generator for a fixed model and lattice."""

    def __init__(self, model: ModelParams, lattice: LatticeSpec, chi: float | None = None):
        n = lattice.n_sites
        _check_size(n)
        self.n = n
        self.model = model
        self.chi = float(lattice.coordination if chi is None else chi)
        z = 1.0 - 2.0 * np.indices((2,) * n).reshape(n, -1)  # z[i, s] = +-1
        zz = sum((z[i] * z[j] for i, j in lattice.edges), np.zeros(2**n))
        up = 0.5 * (1.0 + z).sum(axis=0)
        d = model.V / (2.0 * self.chi) * zz - 0.5j * model.gamma * up
        self._diag = (-1j * (d[:, None] - np.conj(d)[None, :])).reshape((2,) * (2 * n))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        n, g, gamma = self.n, self.model.g, self.model.gamma
        rho = np.ascontiguousarray(rho)
        out = self._diag * rho
        if g != 0.0:
            scaled = (-0.5j * g) * rho
            for axis in range(2 * n):
                # X on a ket axis enters with +, on a bra axis with -
                o = out.reshape(2**axis, 2, -1)
                s = scaled.reshape(2**axis, 2, -1)
                if axis < n:
                    o[:, 0] += s[:, 1]
                    o[:, 1] += s[:, 0]
                else:
                    o[:, 0] -= s[:, 1]
                    o[:, 1] -= s[:, 0]
        if gamma != 0.0:
            for i in range(n):
                dst = [slice(None)] * (2 * n)
                src = [slice(None)] * (2 * n)
                dst[i] = dst[n + i] = 1
                src[i] = src[n + i] = 0
                out[tuple(dst)] += gamma * rho[tuple(src)]
        return out


def lindblad_rhs(rho: np.ndarray, model: ModelParams, lattice: LatticeSpec) -> np.ndarray:
    """``d rho / dt`` for a ``2^N x 2^N`` matrix or a ``(2,) * 2N`` tensor.

    Raises:
        OracleSizeError: for more than ten sites.
    """
    n = lattice.n_sites
    _check_size(n)
    rho = np.asarray(rho, dtype=complex)
    shape = rho.shape
    out = LindbladGenerator(model, lattice)(rho.reshape((2,) * (2 * n)))
    return out.reshape(shape)


def _site_op(op: np.ndarray, i: int, n: int) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    return reduce(np.kron, [op if k == i else eye for k in range(n)])


def dense_liouvillian(model: ModelParams, lattice: LatticeSpec) -> np.ndarray:
    """Explicit ``4^N x 4^N`` superoperator acting on row-major ``vec(rho)``; for tests."""
    n = lattice.n_sites
    if n > 5:
        raise OracleSizeError("dense Liouvillian is only meant for tiny systems")
    dim = 2**n
    chi = lattice.coordination
    H = sum(0.5 * model.g * _site_op(PAULI_X, i, n) for i in range(n))
    for i, j in lattice.edges:
        H = H + model.V / (2.0 * chi) * _site_op(PAULI_Z, i, n) @ _site_op(PAULI_Z, j, n)
    eye = np.eye(dim)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for i in range(n):
        jump = np.sqrt(model.gamma) * _site_op(SIGMA_MINUS, i, n)
        jj = jump.conj().T @ jump
        L += np.kron(jump, jump.conj()) - 0.5 * (np.kron(jj, eye) + np.kron(eye, jj.T))
    return L


def density_from_state(state: VariationalState, group: SymmetryGroup | None = None) -> np.ndarray:
    """Operator ``(1/|G|) sum_tau sum_k c_k prod_i (1 + m_k,tau(i) . sigma) / 2``."""
    n = state.n_sites
    _check_size(n)
    if group is None:
        group = identity_group(n)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for perm in group.perms:
        for c, m in zip(state.c, state.m):
            factors = [0.5 * (np.eye(2) + sum(v * p for v, p in zip(m[perm[i]], PAULIS))) for i in range(n)]
            rho += c * reduce(np.kron, factors)
    return rho / group.order


def _as_tensor(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = int(round(np.log2(rho.size))) // 2
    return rho.reshape((2,) * (2 * n))


def reduced_density(rho: np.ndarray, sites) -> np.ndarray:
    """Reduced density matrix on ``sites`` (in the given order)."""
    t = _as_tensor(rho)
    n = t.ndim // 2
    sites = list(sites)
    rest = [k for k in range(n) if k not in sites]
    perm = sites + rest + [n + k for k in sites] + [n + k for k in rest]
    t = np.transpose(t, perm)
    a, b = 2 ** len(sites), 2 ** len(rest)
    return np.einsum("ikjk->ij", t.reshape(a, b, a, b))


def exact_magnetizations(rho: np.ndarray) -> np.ndarray:
    """``<sigma^alpha_i>`` for all sites, shape ``(n, 3)``."""
    n = _as_tensor(rho).ndim // 2
    out = np.empty((n, 3))
    for i in range(n):
        r = reduced_density(rho, [i])
        out[i] = [np.real(np.trace(r @ p)) for p in PAULIS]
    return out


def exact_correlator(rho: np.ndarray, i: int, j: int, alpha: int, beta: int) -> float:
    if i == j:
        raise ValueError("use a single-site expectation for i == j")
    r = reduced_density(rho, [i, j])
    return float(np.real(np.trace(r @ np.kron(PAULIS[alpha], PAULIS[beta]))))


def husimi_q(rho: np.ndarray, point) -> float:
    """``(1 / 2 pi)^N <Omega| rho |Omega>`` for the product coherent state at ``point``."""
    n_vec = np.asarray(getattr(point, "n", point), dtype=float).reshape(-1, 3)
    theta = np.arccos(np.clip(n_vec[:, 2], -1.0, 1.0))
    phi = np.arctan2(n_vec[:, 1], n_vec[:, 0])
    kets = [np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)]) for t, p in zip(theta, phi)]
    omega = reduce(np.kron, kets)
    rho = np.asarray(rho, dtype=complex).reshape(omega.size, omega.size)
    return float(np.real(omega.conj() @ rho @ omega)) / (2 * np.pi) ** len(kets)


def _diagnostics(rho_t: np.ndarray) -> tuple[float, float]:
    dim = int(round(np.sqrt(rho_t.size)))
    mat = rho_t.reshape(dim, dim)
    trace_err = abs(np.trace(mat) - 1.0)
    herm_err = float(np.abs(mat - mat.conj().T).max())
    return float(trace_err), herm_err


def run_exact(
    initial: np.ndarray | VariationalState,
    model: ModelParams,
    lattice: LatticeSpec,
    t_final: float,
    dt: float,
    record_every: int = 1,
    group: SymmetryGroup | None = None,
    on_record=None,
) -> Trajectory:
    """Fixed-step RK4 integration of the master equation.

    ``initial`` is either a density matrix or a variational state, which is
    converted with :func:`density_from_state` (using ``group``).

    Raises:
        OracleSizeError: for more than ten sites.
    """
    n = lattice.n_sites
    _check_size(n)
    if isinstance(initial, VariationalState):
        initial = density_from_state(initial, group)
    n_steps = step_count(t_final, dt)
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    rhs = LindbladGenerator(model, lattice)
    rho = _as_tensor(np.array(initial, dtype=complex))
    if rho.ndim != 2 * n:
        raise ValueError("density matrix does not match the lattice size")
    recorder = Recorder(on_record)

    def record(step):
        trace_err, herm_err = _diagnostics(rho)
        sites = exact_magnetizations(rho)
        bloch = float(np.linalg.norm(sites, axis=1).max())
        recorder.add(Record(step * dt, sites, trace_err, bloch, herm_err))

    record(0)
    for step in range(1, n_steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % record_every == 0 or step == n_steps:
            record(step)
    dim = 2**n
    return recorder.build(dt, metadata={"kind": "exact", "final_rho": rho.reshape(dim, dim)})

