"""Closed-form phase-space integrals for the dissipative transverse-field Ising model.

All single-sphere integrals use the unnormalised measure (total area 4 pi).
The kernel functions only use indexing along the last axis and elementwise
arithmetic, so they accept numpy arrays (broadcasting over leading axes) as
well as the dual numbers of :mod:`vmcs.autodiff`.

Conventions for the Liouvillian pieces:

* one-local: ``-i g [S^x, .] + gamma (S^- . S^+ - {S^+ S^-, .}/2)``
* two-local: ``-i v_eff [S^z_i S^z_j, .]`` on every bond.

With ``H = sum_i (g/2) sigma^x_i + (V / 2 chi) sum_<ij> sigma^z_i sigma^z_j``
this means ``v_eff = 2 V / chi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import BiDual, Dual
from .lattice import LatticeSpec, SymmetryGroup, identity_group

TWELVE_PI = 12.0 * np.pi
TWENTYFOUR_PI = 24.0 * np.pi
TWO_LOCAL_NORM = 288.0 * np.pi**2


@dataclass(frozen=True)
class ModelParams:
    """Rates of the model; ``v_eff`` is the constant used by the two-local kernel."""

    g: float
    V: float
    gamma: float
    v_eff: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("decay rate must be non-negative")
        for name in ("g", "V", "gamma", "v_eff"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def for_lattice(
        cls, g: float, V: float, gamma: float, lattice: LatticeSpec, v_eff: float | None = None
    ) -> "ModelParams":
        if v_eff is None:
            v_eff = 2.0 * V / lattice.coordination
        return cls(float(g), float(V), float(gamma), float(v_eff))

    @property
    def is_null(self) -> bool:
        return self.g == 0 and self.gamma == 0 and self.v_eff == 0


def _arr(x):
    return x if isinstance(x, (Dual, BiDual)) else np.asarray(x, dtype=float)


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _cross_x(a, b):
    return a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]


def _cross_z(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def pair_overlap(mL, mR):
    """``<q(mL), q(mR)> = (3 + mL.mR) / (12 pi)``."""
    mL, mR = _arr(mL), _arr(mR)
    return (_dot(mL, mR) + 3.0) / TWELVE_PI


def one_local_kernel(mL, mR, model: ModelParams):
    """``<q(mL), L1 q(mR)>`` for the transverse field and the local decay."""
    mL, mR = _arr(mL), _arr(mR)
    field = _cross_x(mR, mL) * (model.g / TWELVE_PI)
    decay = (_dot(mL, mR) + mL[..., 2] * (mR[..., 2] + 2.0)) * (model.gamma / TWENTYFOUR_PI)
    return field - decay


def two_local_kernel(mLi, mLj, mRi, mRj, model: ModelParams):
    """``<q(mLi) q(mLj), L2 q(mRi) q(mRj)>`` for one ZZ bond."""
    mLi, mLj, mRi, mRj = _arr(mLi), _arr(mLj), _arr(mRi), _arr(mRj)
    a = (mLj[..., 2] + mRj[..., 2] * 3.0) * _cross_z(mRi, mLi)
    b = (mLi[..., 2] + mRi[..., 2] * 3.0) * _cross_z(mRj, mLj)
    return (a + b) * (model.v_eff / TWO_LOCAL_NORM)


def one_local_grad_left(mR, model: ModelParams) -> np.ndarray:
    """Gradient of :func:`one_local_kernel` with respect to ``mL``.

    The kernel is linear in ``mL``, so this also gives the kernel itself as
    ``mL . grad``.
    """
    mR = np.asarray(mR, dtype=float)
    gx = -model.gamma / TWENTYFOUR_PI * mR[..., 0]
    gy = model.g / TWELVE_PI * (-mR[..., 2]) - model.gamma / TWENTYFOUR_PI * mR[..., 1]
    gz = model.g / TWELVE_PI * mR[..., 1] - model.gamma / TWENTYFOUR_PI * (2.0 * mR[..., 2] + 2.0)
    return np.stack([gx, gy, gz], axis=-1)


def two_local_grad_left(mLi, mLj, mRi, mRj, model: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`two_local_kernel` with respect to ``mLi`` and ``mLj``."""
    mLi, mLj, mRi, mRj = (np.asarray(v, dtype=float) for v in (mLi, mLj, mRi, mRj))
    s = model.v_eff / TWO_LOCAL_NORM
    wi = mLj[..., 2] + 3.0 * mRj[..., 2]
    wj = mLi[..., 2] + 3.0 * mRi[..., 2]
    czi = _cross_z(mRi, mLi)
    czj = _cross_z(mRj, mLj)
    # d(mR x mL)_z / d mL = (-mR_y, mR_x, 0)
    grad_i = s * np.stack([-wi * mRi[..., 1], wi * mRi[..., 0], czj], axis=-1)
    grad_j = s * np.stack([-wj * mRj[..., 1], wj * mRj[..., 0], czi], axis=-1)
    return grad_i, grad_j


# -- generating functions -------------------------------------------------------


def _paired_sites(mL, mR, group: SymmetryGroup):
    """Broadcast left and permuted right Bloch vectors to ``(k, l, g, i, 3)``."""
    mL, mR = _arr(mL), _arr(mR)
    left = mL[:, None, None]
    right = mR[:, group.perms][None]
    return left, right


def _coeff_weights(cL, cR):
    cL, cR = _arr(cL), _arr(cR)
    return cL[:, None, None] * cR[None, :, None]


def _check_sizes(mL, mR, group):
    nL, nR = _arr(mL).shape[1], _arr(mR).shape[1]
    if nL != nR:
        raise ValueError(f"states have {nL} and {nR} sites")
    if group.n_sites != nL:
        raise ValueError("symmetry group acts on a different number of sites")


def _product(factors, n: int, skip=()):
    out = None
    for mu in range(n):
        if mu in skip:
            continue
        f = factors[..., mu]
        out = f if out is None else out * f
    return out if out is not None else 1.0


def overlap_integral(cL, mL, cR, mR, group: SymmetryGroup | None = None):
    """``<Q_L, Q_R>`` for two (symmetrised) mixtures.

    The double group average collapses to a single one over ``sigma``:
    ``(1/|G|) sum_sigma sum_kl cL_k cR_l prod_i <q(mL_ki), q(mR_l,sigma(i))>``.
    """
    if group is None:
        group = identity_group(_arr(mL).shape[1])
    _check_sizes(mL, mR, group)
    left, right = _paired_sites(mL, mR, group)
    overlaps = pair_overlap(left, right)
    n = _arr(mL).shape[1]
    terms = _coeff_weights(cL, cR) * _product(overlaps, n)
    return terms.sum() / group.order


def liouville_integral(cL, mL, cR, mR, model: ModelParams, lattice: LatticeSpec, group: SymmetryGroup | None = None):
    """``<Q_L, L_Q Q_R>`` built from one- and two-local kernels.

    Leave-one-out and leave-two-out site products are formed directly, so no
    division by an overlap is ever taken.
    """
    n = _arr(mL).shape[1]
    if group is None:
        group = identity_group(n)
    _check_sizes(mL, mR, group)
    if lattice.n_sites != n:
        raise ValueError("lattice and state have different numbers of sites")
    left, right = _paired_sites(mL, mR, group)
    overlaps = pair_overlap(left, right)

    total = None
    for i in range(n):
        term = one_local_kernel(left[..., i, :], right[..., i, :], model) * _product(overlaps, n, skip=(i,))
        total = term if total is None else total + term
    for i, j in lattice.edges:
        k2 = two_local_kernel(left[..., i, :], left[..., j, :], right[..., i, :], right[..., j, :], model)
        total = total + k2 * _product(overlaps, n, skip=(i, j))
    return (_coeff_weights(cL, cR) * total).sum() / group.order


def overlap_generating(stateL, stateR, group: SymmetryGroup | None = None) -> float:
    """Overlap generating function of two :class:`VariationalState` objects."""
    return float(overlap_integral(stateL.c, stateL.m, stateR.c, stateR.m, group))


def liouville_generating(stateL, stateR, model: ModelParams, lattice: LatticeSpec, group: SymmetryGroup | None = None) -> float:
    """Liouvillian generating function of two :class:`VariationalState` objects."""
    return float(liouville_integral(stateL.c, stateL.m, stateR.c, stateR.m, model, lattice, group))
