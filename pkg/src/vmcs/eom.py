"""Geometric tensor, force vector and the regularised equations of motion.

Both ``T`` and ``F`` are derivatives of the generating functions of
:mod:`vmcs.kernels` taken at ``theta_L = theta_R = theta``.  Parameter order
is ``[c_1..c_K, m_11x, m_11y, m_11z, m_12x, ...]``.

Two gradient modes are available.  ``closed_form`` differentiates the site
products analytically; the leave-one/two/three-out products it needs are
built from prefix and suffix cumulative products, never by dividing out a
factor.  The production path is compiled (:mod:`vmcs._closed_form`); the
vectorised numpy version below is kept as a readable reference.
``forward_mode`` pushes dual numbers through the generic generating
functions and is meant as a cross-check on small systems.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _closed_form
from .ansatz import VariationalState
from .autodiff import BiDual, Dual
from .kernels import (
    TWELVE_PI,
    ModelParams,
    liouville_integral,
    one_local_grad_left,
    overlap_integral,
    two_local_grad_left,
    two_local_kernel,
)
from .lattice import LatticeSpec, SymmetryGroup, identity_group

logger = logging.getLogger(__name__)

GRADIENT_MODES = ("closed_form", "forward_mode")

# cap on the number of doubles in the largest intermediate of one group chunk
_CHUNK_BUDGET = 2_000_000


class SolveError(RuntimeError):
    """The regularised tensor could not be factorised even after escalation."""


@dataclass(frozen=True)
class EomConfig:
    """Options of the linear solve.

    ``epsilon`` is the Tikhonov shift.  With ``relative_shift`` (the default)
    it is measured in units of the mean diagonal of ``T``, which makes the
    solve invariant under the overall ``(3 pi)^-N`` scale of the tensor.
    """

    epsilon: float = 1e-10
    gradient_mode: str = "closed_form"
    relative_shift: bool = True
    max_escalations: int = 3

    def __post_init__(self):
        if not 1e-12 <= self.epsilon <= 1e-6:
            raise ValueError(f"epsilon must lie in [1e-12, 1e-6], got {self.epsilon}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")


@dataclass(frozen=True)
class SolveInfo:
    epsilon: float
    shift: float
    residual: float
    force_norm: float
    escalations: int


def _exclusive_prod(x: np.ndarray) -> np.ndarray:
    """``out[..., i] = prod_{j != i} x[..., j]`` without division."""
    ones = np.ones(x.shape[:-1] + (1,))
    pre = np.concatenate([ones, np.cumprod(x[..., :-1], axis=-1)], axis=-1)
    suf = np.concatenate([np.cumprod(x[..., :0:-1], axis=-1)[..., ::-1], ones], axis=-1)
    return pre * suf


def _group_chunks(group: SymmetryGroup, n_comp: int, n_sites: int, n_edges: int):
    per_element = n_comp * n_comp * n_sites * max(n_sites, n_edges, 1) * 3
    size = max(1, _CHUNK_BUDGET // max(per_element, 1))
    for start in range(0, group.order, size):
        yield group.perms[start : start + size]


class _SitePairs:
    """Overlap factors and their leave-out products for one chunk of group elements.

    Arrays are laid out as ``(g, k, l, i)``: group element, left component,
    right component, left site.
    """

    def __init__(self, m: np.ndarray, perms: np.ndarray):
        n = m.shape[1]
        self.m = m
        # right Bloch vector seen by left site i: m[l, sigma(i)]
        self.mr = m[:, perms].transpose(1, 0, 2, 3)
        self.overlap = (3.0 + np.einsum("kia,glia->gkli", m, self.mr)) / TWELVE_PI
        self.loo = _exclusive_prod(self.overlap)
        self.full = self.loo[..., 0] * self.overlap[..., 0]
        diag = np.arange(n)
        blocked = np.repeat(self.overlap[..., None, :], n, axis=-2)
        blocked[..., diag, diag] = 1.0
        loo2 = _exclusive_prod(blocked)
        loo2[..., diag, diag] = 0.0
        self.loo2 = loo2  # prod over sites other than i and j, zero on i == j


def _tensor_closed_numpy(state: VariationalState, group: SymmetryGroup) -> np.ndarray:
    c, m = state.c, state.m
    K, N = m.shape[0], m.shape[1]
    t_cc = np.zeros((K, K))
    t_mc = np.zeros((K, N, 3, K))
    t_mm = np.zeros((K, N, 3, K, N, 3))
    eye3 = np.eye(3)
    cc = np.outer(c, c)
    for perms in _group_chunks(group, K, N, 0):
        sp = _SitePairs(m, perms)
        t_cc += sp.full.sum(axis=0)
        t_mc += np.einsum("gkli,glia->kial", sp.loo, sp.mr) * c[:, None, None, None] / TWELVE_PI
        for g, perm in enumerate(perms):
            cross = np.einsum("klij,lia,kjb->kialjb", sp.loo2[g] * cc[:, :, None, None], sp.mr[g], m)
            cross /= TWELVE_PI**2
            same = np.einsum("kli,ab->kialb", sp.loo[g] * cc[:, :, None], eye3) / TWELVE_PI
            idx = np.arange(N)
            cross[:, idx, :, :, idx, :] += same.transpose(1, 0, 2, 3, 4)
            # right-hand site index is sigma(j)
            t_mm[:, :, :, :, perm, :] += cross
    P = state.n_params
    T = np.empty((P, P))
    T[:K, :K] = t_cc
    T[K:, :K] = t_mc.reshape(K * N * 3, K)
    T[:K, K:] = T[K:, :K].T
    T[K:, K:] = t_mm.reshape(K * N * 3, K * N * 3)
    T /= group.order
    return 0.5 * (T + T.T)


def _force_closed_numpy(
    state: VariationalState, model: ModelParams, lattice: LatticeSpec, group: SymmetryGroup
) -> np.ndarray:
    c, m = state.c, state.m
    K, N = m.shape[0], m.shape[1]
    edges = lattice.edge_array()
    E = len(edges)
    ei, ej = edges[:, 0], edges[:, 1]
    inc_i = np.zeros((E, N))
    inc_j = np.zeros((E, N))
    inc_i[np.arange(E), ei] = 1.0
    inc_j[np.arange(E), ej] = 1.0
    outside = 1.0 - inc_i - inc_j

    f_c = np.zeros(K)
    f_m = np.zeros((K, N, 3))
    for perms in _group_chunks(group, K, N, E):
        sp = _SitePairs(m, perms)
        grad1 = one_local_grad_left(sp.mr, model)[:, None]  # (g, 1, l, i, 3)
        k1 = np.einsum("kia,glia->gkli", m, grad1[:, 0])
        s_c = np.einsum("gkli,gkli->gkl", k1, sp.loo)
        d_overlap = np.einsum("gkli,gklia->gkla", k1, sp.loo2)
        local = grad1 * sp.loo[..., None]

        if E:
            mli, mlj = m[None, :, None, ei], m[None, :, None, ej]
            mri, mrj = sp.mr[:, None, :, ei], sp.mr[:, None, :, ej]
            k2 = two_local_kernel(mli, mlj, mri, mrj, model)
            g2i, g2j = two_local_grad_left(mli, mlj, mri, mrj, model)
            p_e = sp.loo2[..., ei, ej]
            s_c = s_c + np.einsum("gkle,gkle->gkl", k2, p_e)
            # leave-three-out: sites of the bond and the differentiated site
            bonded = np.repeat(sp.overlap[..., None, :], E, axis=-2)
            bonded[..., np.arange(E), ei] = 1.0
            bonded[..., np.arange(E), ej] = 1.0
            loo3 = _exclusive_prod(bonded)
            d_overlap = d_overlap + np.einsum("gkle,gklea,ea->gkla", k2, loo3, outside)
            local = local + np.einsum("gkle,gklea,en->gklna", p_e, g2i, inc_i)
            local = local + np.einsum("gkle,gklea,en->gklna", p_e, g2j, inc_j)

        f_c += np.einsum("l,gkl->k", c, s_c)
        chain = local + d_overlap[..., None] * sp.mr[:, None] / TWELVE_PI
        f_m += np.einsum("l,gklia->kia", c, chain) * c[:, None, None]
    return np.concatenate([f_c, f_m.reshape(-1)]) / group.order


def _assemble_tensor_forward(state: VariationalState, group: SymmetryGroup) -> np.ndarray:
    theta = state.to_vector()
    P, K, N = theta.size, state.n_components, state.n_sites
    left = BiDual.seed_a(theta, P)
    right = BiDual.seed_b(theta, P)
    value = overlap_integral(left[:K], left[K:].reshape(K, N, 3), right[:K], right[K:].reshape(K, N, 3), group)
    T = value.dab
    return 0.5 * (T + T.T)


def _assemble_force_forward(state, model, lattice, group) -> np.ndarray:
    theta = state.to_vector()
    K, N = state.n_components, state.n_sites
    left = Dual.seed(theta)
    value = liouville_integral(left[:K], left[K:].reshape(K, N, 3), state.c, state.m, model, lattice, group)
    return value.der.copy()


def assemble_tensor(
    state: VariationalState, group: SymmetryGroup | None = None, mode: str = "closed_form"
) -> np.ndarray:
    """Quantum geometric tensor ``T = d^2 I_T / d theta_L d theta_R``."""
    if group is None:
        group = identity_group(state.n_sites)
    if mode == "closed_form":
        return _closed_form.tensor(state.c, state.m, group.perms)
    if mode == "forward_mode":
        return _assemble_tensor_forward(state, group)
    raise ValueError(f"unknown gradient mode {mode!r}")


def assemble_force(
    state: VariationalState,
    model: ModelParams,
    lattice: LatticeSpec,
    group: SymmetryGroup | None = None,
    mode: str = "closed_form",
) -> np.ndarray:
    """Force vector ``F = d I_F / d theta_L``."""
    if group is None:
        group = identity_group(state.n_sites)
    if mode == "closed_form":
        edges = lattice.edge_array().astype(np.int64).reshape(-1, 2)
        return _closed_form.force(state.c, state.m, group.perms, edges, model.g, model.gamma, model.v_eff)
    if mode == "forward_mode":
        return _assemble_force_forward(state, model, lattice, group)
    raise ValueError(f"unknown gradient mode {mode!r}")


def regularized_solve(T: np.ndarray, F: np.ndarray, config: EomConfig = EomConfig()) -> tuple[np.ndarray, SolveInfo]:
    """Solve ``(T + shift I) x = F`` by Cholesky, escalating the shift on failure.

    Raises:
        SolveError: if the factorisation still fails after
            ``config.max_escalations`` tenfold increases of epsilon.
    """
    T = np.asarray(T, dtype=float)
    F = np.asarray(F, dtype=float)
    if T.shape != (F.size, F.size):
        raise ValueError(f"tensor of shape {T.shape} does not match force of length {F.size}")
    scale = 1.0
    if config.relative_shift:
        scale = float(np.trace(T)) / F.size
        if not scale > 0:
            scale = 1.0
    eps = config.epsilon
    for attempt in range(config.max_escalations + 1):
        shift = eps * scale
        A = T + shift * np.eye(F.size)
        try:
            factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        except np.linalg.LinAlgError:
            logger.warning("Cholesky failed with epsilon=%.1e, escalating", eps)
            eps *= 10.0
            continue
        x = scipy.linalg.cho_solve(factor, F)
        residual = float(np.linalg.norm(A @ x - F))
        return x, SolveInfo(eps, shift, residual, float(np.linalg.norm(F)), attempt)
    raise SolveError(f"tensor not positive definite even with epsilon={eps / 10:.1e}")


def solve_theta_dot(T: np.ndarray, F: np.ndarray, config: EomConfig = EomConfig()) -> np.ndarray:
    return regularized_solve(T, F, config)[0]


def theta_dot(
    state: VariationalState,
    model: ModelParams,
    lattice: LatticeSpec,
    group: SymmetryGroup | None = None,
    config: EomConfig = EomConfig(),
) -> tuple[np.ndarray, SolveInfo]:
    """Parameter velocity of the variational dynamics at ``state``."""
    T = assemble_tensor(state, group, config.gradient_mode)
    F = assemble_force(state, model, lattice, group, config.gradient_mode)
    return regularized_solve(T, F, config)
