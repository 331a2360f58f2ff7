"""Multi-coherent-state mixtures for the spin-1/2 Husimi function.

A state is a real mixture of product functions

    Q(n_1..n_N) = sum_k c_k prod_i (1 + n_i . m_ki) / (4 pi)

with coefficients ``c`` (length ``n_components``, any sign, summing to one)
and Cartesian Bloch vectors ``m`` of shape ``(n_components, n_sites, 3)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import LatticeSpec, SymmetryGroup, build_lattice, identity_group, single_site

FOUR_PI = 4.0 * np.pi


class DegenerateStateError(ValueError):
    """Raised when the mixture coefficients sum to (numerically) zero."""


@dataclass(frozen=True)
class VariationalState:
    c: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        m = np.array(self.m, dtype=float)
        if m.ndim != 3 or m.shape[2] != 3 or m.shape[0] != c.size:
            raise ValueError(f"expected m of shape ({c.size}, n_sites, 3), got {m.shape}")
        c.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "m", m)

    @property
    def n_components(self) -> int:
        return self.c.size

    @property
    def n_sites(self) -> int:
        return self.m.shape[1]

    @property
    def n_params(self) -> int:
        return self.c.size + self.m.size

    def to_vector(self) -> np.ndarray:
        """Flat parameters ``[c_1..c_K, m_11x, m_11y, m_11z, m_12x, ...]``."""
        return np.concatenate([self.c, self.m.reshape(-1)])

    @classmethod
    def from_vector(cls, theta, n_components: int, n_sites: int) -> "VariationalState":
        theta = np.asarray(theta, dtype=float)
        expected = n_components * (1 + 3 * n_sites)
        if theta.size != expected:
            raise ValueError(f"parameter vector has {theta.size} entries, expected {expected}")
        return cls(theta[:n_components], theta[n_components:].reshape(n_components, n_sites, 3))

    def with_vector(self, theta) -> "VariationalState":
        return VariationalState.from_vector(theta, self.n_components, self.n_sites)

    def max_bloch_norm(self) -> float:
        return float(np.linalg.norm(self.m, axis=-1).max())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.m)))

    def to_dict(self, lattice: LatticeSpec | None = None) -> dict:
        out = {"c": self.c.tolist(), "m": self.m.tolist()}
        if lattice is not None:
            out["lattice"] = lattice.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "VariationalState":
        return cls(np.array(data["c"], dtype=float), np.array(data["m"], dtype=float))


def renormalize(state: VariationalState) -> VariationalState:
    """Rescale ``c`` so that it sums to one; ``m`` is untouched."""
    total = float(np.sum(state.c))
    if abs(total) < 1e-12:
        raise DegenerateStateError(f"mixture coefficients sum to {total:.3e}")
    return VariationalState(state.c / total, state.m)


def init_product_state(
    lattice: LatticeSpec | int,
    n_components: int,
    direction=(1.0, 0.0, 0.0),
    perturbation: float = 1e-2,
    seed: int = 0,
) -> VariationalState:
    """Equal-weight mixture of (slightly perturbed) copies of a product state.

    Each Bloch vector is ``direction`` plus independent uniform noise in
    ``[-perturbation, perturbation]`` per Cartesian component, projected back
    into the unit ball when the noise pushed it outside.
    """
    if n_components < 1:
        raise ValueError("need at least one component")
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    if not 0.0 <= perturbation < 0.5:
        raise ValueError("perturbation must lie in [0, 0.5)")
    n_sites = lattice if isinstance(lattice, int) else lattice.n_sites

    rng = np.random.default_rng(seed)
    noise = rng.uniform(-perturbation, perturbation, size=(n_components, n_sites, 3))
    m = direction + noise
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    m = np.where(norms > 1.0, m / norms, m)
    c = np.full(n_components, 1.0 / n_components)
    return VariationalState(c, m)


def evaluate_q(state: VariationalState, point, group: SymmetryGroup | None = None) -> float:
    """Value of the (symmetrised) ansatz at a phase-space point.

    ``point`` is a :class:`PhasePoint` or an ``(n_sites, 3)`` array of unit vectors.
    """
    n = point.n if isinstance(point, PhasePoint) else np.asarray(point, dtype=float)
    if group is None:
        group = identity_group(state.n_sites)
    # m_perm[g, k, i] = m[k, tau_g(i)]
    m_perm = state.m[:, group.perms].transpose(1, 0, 2, 3)
    factors = (1.0 + np.einsum("gkia,ia->gki", m_perm, n)) / FOUR_PI
    return float(np.einsum("k,gk->", state.c, factors.prod(axis=-1)) / group.order)


@dataclass(frozen=True)
class PhasePoint:
    """One unit vector per site."""

    n: np.ndarray

    def __post_init__(self):
        n = np.array(self.n, dtype=float)
        if n.ndim != 2 or n.shape[1] != 3:
            raise ValueError("phase point must have shape (n_sites, 3)")
        if np.any(np.abs(np.linalg.norm(n, axis=1) - 1.0) > 1e-12):
            raise ValueError("phase-point vectors must have unit norm")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_angles(cls, theta, phi) -> "PhasePoint":
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        return cls(
            np.stack(
                [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
                axis=-1,
            )
        )

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        theta = np.arccos(np.clip(self.n[:, 2], -1.0, 1.0))
        phi = np.arctan2(self.n[:, 1], self.n[:, 0])
        return theta, phi


def save_state(path, state: VariationalState, lattice: LatticeSpec | None = None) -> None:
    Path(path).write_text(json.dumps(state.to_dict(lattice)))


def load_state(path) -> tuple[VariationalState, LatticeSpec | None]:
    data = json.loads(Path(path).read_text())
    lattice = None
    if "lattice" in data:
        lat = data["lattice"]
        if lat["Lx"] * lat["Ly"] == 1:
            lattice = single_site()
        else:
            lattice = build_lattice(lat["Lx"], lat["Ly"], lat["periodic"])
    return VariationalState.from_dict(data), lattice
