"""Spin expectation values of a variational state.

The P-symbol of ``sigma^alpha_i`` is ``3 n^alpha_i``; integrated against a
product of ``(1 + n . m) / 4 pi`` factors it returns ``m^alpha_i``.  For
operators on distinct sites the symbols multiply, so

    <sigma^a_i>             = sum_k c_k m^a_ki
    <sigma^a_i sigma^b_j>   = sum_k c_k m^a_ki m^b_kj      (i != j)

each averaged over the symmetry group for a symmetrised ansatz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import VariationalState
from .lattice import SymmetryGroup, identity_group

AXES = {"x": 0, "y": 1, "z": 2}


def _group(state: VariationalState, group: SymmetryGroup | None) -> SymmetryGroup:
    if group is None:
        return identity_group(state.n_sites)
    if group.n_sites != state.n_sites:
        raise ValueError("symmetry group acts on a different number of sites")
    return group


def _axis(alpha) -> int:
    if isinstance(alpha, str):
        return AXES[alpha.lower()]
    if alpha not in (0, 1, 2):
        raise ValueError(f"axis must be x, y, z or 0..2, got {alpha!r}")
    return int(alpha)


def _check_site(state: VariationalState, i: int) -> int:
    if not 0 <= i < state.n_sites:
        raise IndexError(f"site {i} out of range for {state.n_sites} sites")
    return int(i)


def all_magnetizations(state: VariationalState, group: SymmetryGroup | None = None) -> np.ndarray:
    """``<sigma^alpha_i>`` for every site, shape ``(n_sites, 3)``."""
    group = _group(state, group)
    # m[:, perms] has shape (k, g, i, 3) with entry m[k, tau_g(i)]
    return np.einsum("k,kgia->ia", state.c, state.m[:, group.perms]) / group.order


def site_magnetization(state: VariationalState, group: SymmetryGroup | None, i: int) -> np.ndarray:
    i = _check_site(state, i)
    group = _group(state, group)
    images = group.perms[:, i]
    return np.einsum("k,kga->a", state.c, state.m[:, images]) / group.order


def two_site_correlator(state: VariationalState, group: SymmetryGroup | None, i: int, j: int, alpha, beta) -> float:
    """``<sigma^alpha_i sigma^beta_j>`` for ``i != j``.

    Raises:
        ValueError: for ``i == j``; same-site products need operator ordering.
    """
    i, j = _check_site(state, i), _check_site(state, j)
    if i == j:
        raise ValueError("same-site correlators are not supported")
    a, b = _axis(alpha), _axis(beta)
    group = _group(state, group)
    mi = state.m[:, group.perms[:, i], a]
    mj = state.m[:, group.perms[:, j], b]
    return float(np.einsum("k,kg,kg->", state.c, mi, mj) / group.order)


@dataclass(frozen=True)
class ObservableRecord:
    """Per-site ``<sigma^x,y,z>`` and their lattice averages at one time."""

    sites: np.ndarray
    correlators: dict = field(default_factory=dict)

    @property
    def average(self) -> np.ndarray:
        return self.sites.mean(axis=0)

    @classmethod
    def from_state(
        cls,
        state: VariationalState,
        group: SymmetryGroup | None = None,
        pairs: tuple = (),
    ) -> "ObservableRecord":
        """``pairs`` lists ``(i, j, alpha, beta)`` correlators to include."""
        sites = all_magnetizations(state, group)
        corr = {tuple(p): two_site_correlator(state, group, *p) for p in pairs}
        return cls(sites, corr)
