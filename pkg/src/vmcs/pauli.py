"""Pauli-basis reference for the phase-space integrals.

Operators on ``n`` spins are stored as complex coefficient tensors ``a`` of
shape ``(4,) * n`` with ``A = sum_s a_s sigma_{s_1} x ... x sigma_{s_n}`` and
``sigma_0 = 1``.  The Lindblad generator acts by left/right multiplication
tables derived from the Pauli matrices themselves, and the Husimi symbol of
``A`` is the multilinear polynomial ``(2 pi)^-n sum_s a_s prod_i n_i[s_i]``
(``n[0] = 1``).  Integrals against products of ``q(n; m)`` then follow from
the exact sphere moments; nothing here reuses the closed-form kernels.
"""

from __future__ import annotations

import string

import numpy as np

from .kernels import ModelParams
from .lattice import LatticeSpec, SymmetryGroup, identity_group

MAX_ORACLE_SITES = 4

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# sigma_a sigma_b = sum_c PRODUCT[a, b, c] sigma_c
PRODUCT = np.einsum("abij,cji->abc", np.einsum("aij,bjk->abik", PAULI, PAULI), PAULI) / 2

# single-sphere moments with the normalised measure dOmega / 4 pi
FIRST_MOMENT = np.array([1.0, 0.0, 0.0, 0.0])  # int n_s
SECOND_MOMENT = np.zeros((3, 4))  # int n_beta n_s
SECOND_MOMENT[:, 1:] = np.eye(3) / 3.0


def _decompose(op: np.ndarray) -> np.ndarray:
    return np.einsum("aji,ij->a", PAULI, op) / 2


def left_table(op: np.ndarray) -> np.ndarray:
    """Matrix acting on a site's Pauli index for ``A -> op @ A``."""
    x = _decompose(op)
    return np.einsum("a,abc->cb", x, PRODUCT)


def right_table(op: np.ndarray) -> np.ndarray:
    """Matrix acting on a site's Pauli index for ``A -> A @ op``."""
    x = _decompose(op)
    return np.einsum("a,bac->cb", x, PRODUCT)


SX, SY, SZ = PAULI[1] / 2, PAULI[2] / 2, PAULI[3] / 2
S_MINUS = SX - 1j * SY
S_PLUS = SX + 1j * SY


def one_site_superop(model: ModelParams) -> np.ndarray:
    """``-i g [S^x, .] + gamma (S^- . S^+ - {S^+ S^-, .} / 2)`` on Pauli coefficients."""
    num = S_PLUS @ S_MINUS
    hamiltonian = -1j * model.g * (left_table(SX) - right_table(SX))
    decay = model.gamma * (
        left_table(S_MINUS) @ right_table(S_PLUS) - 0.5 * (left_table(num) + right_table(num))
    )
    return hamiltonian + decay


def two_site_superop(model: ModelParams) -> np.ndarray:
    """``-i v_eff [S^z x S^z, .]`` as a ``(4, 4, 4, 4)`` map ``(c_i, c_j, b_i, b_j)``."""
    lz, rz = left_table(SZ), right_table(SZ)
    return -1j * model.v_eff * (np.einsum("ab,cd->acbd", lz, lz) - np.einsum("ab,cd->acbd", rz, rz))


def product_coefficients(m: np.ndarray) -> np.ndarray:
    """Pauli tensor of ``prod_i (1 + m_i . sigma_i) / 2`` for ``m`` of shape ``(n, 3)``."""
    out = np.ones((), dtype=complex)
    for mi in np.asarray(m, dtype=float):
        out = np.multiply.outer(out, np.concatenate([[1.0], mi]) / 2)
    return out


def _apply_site(coeffs, mat, i):
    return np.moveaxis(np.tensordot(mat, coeffs, axes=([1], [i])), 0, i)


def _apply_pair(coeffs, mat4, i, j):
    moved = np.tensordot(mat4, coeffs, axes=([2, 3], [i, j]))
    return np.moveaxis(moved, [0, 1], [i, j])


def apply_liouvillian(coeffs: np.ndarray, model: ModelParams, lattice: LatticeSpec) -> np.ndarray:
    one = one_site_superop(model)
    two = two_site_superop(model)
    out = np.zeros_like(coeffs)
    for i in range(coeffs.ndim):
        out = out + _apply_site(coeffs, one, i)
    for i, j in lattice.edges:
        out = out + _apply_pair(coeffs, two, i, j)
    return out


def site_weights(mL: np.ndarray) -> np.ndarray:
    """``int q(n; mL) n[s] / 2 pi dOmega`` for ``s = 0..3`` from the sphere moments."""
    mL = np.asarray(mL, dtype=float)
    return (FIRST_MOMENT + mL @ SECOND_MOMENT) / (2 * np.pi)


def integrate_against(coeffs: np.ndarray, mL: np.ndarray) -> complex:
    """``<prod_i q(mL_i), Q_A>`` where ``A`` has Pauli tensor ``coeffs``."""
    out = coeffs
    for mi in np.asarray(mL, dtype=float)[::-1]:
        out = out @ site_weights(mi)
    return complex(out)


def q_symbol(coeffs: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Husimi symbol of ``A`` at points ``n`` of shape ``(..., n_sites, 3)``."""
    n = np.asarray(n, dtype=float)
    ext = np.concatenate([np.ones(n.shape[:-1] + (1,)), n], axis=-1)
    letters = string.ascii_lowercase[: coeffs.ndim]
    operands = [coeffs] + [ext[..., i, :] for i in range(coeffs.ndim)]
    spec = letters + "," + ",".join("..." + c for c in letters) + "->..."
    return np.einsum(spec, *operands) / (2 * np.pi) ** coeffs.ndim


# -- kernel-level references ----------------------------------------------------


def pauli_pair_overlap(mL, mR) -> float:
    return integrate_against(product_coefficients([mR]), [mL]).real


def pauli_one_local(mL, mR, model: ModelParams) -> float:
    coeffs = one_site_superop(model) @ product_coefficients([mR])
    return integrate_against(coeffs, [mL]).real


def pauli_two_local(mLi, mLj, mRi, mRj, model: ModelParams) -> float:
    coeffs = np.tensordot(two_site_superop(model), product_coefficients([mRi, mRj]), axes=([2, 3], [0, 1]))
    return integrate_against(coeffs, [mLi, mLj]).real


def pauli_oracle_kernel(
    stateL,
    stateR,
    model: ModelParams,
    lattice: LatticeSpec,
    group: SymmetryGroup | None = None,
    liouvillian: bool = True,
) -> float:
    """Reference value of the Liouvillian generating function.

    With ``liouvillian=False`` the generator is replaced by the identity and
    the overlap generating function is returned instead.

    Raises:
        ValueError: for more than four sites.
    """
    n = stateL.n_sites
    if n > MAX_ORACLE_SITES:
        raise ValueError(f"Pauli oracle is limited to {MAX_ORACLE_SITES} sites, got {n}")
    if stateR.n_sites != n or lattice.n_sites != n:
        raise ValueError("mismatched site counts")
    if group is None:
        group = identity_group(n)
    total = 0.0
    for perm in group.perms:
        for cr, mr in zip(stateR.c, stateR.m):
            coeffs = product_coefficients(mr[perm])
            if liouvillian:
                coeffs = apply_liouvillian(coeffs, model, lattice)
            for cl, ml in zip(stateL.c, stateL.m):
                total += cl * cr * integrate_against(coeffs, ml).real
    return total / group.order
