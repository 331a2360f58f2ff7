"""Periodic and open rectangular lattices and their site-permutation groups.

Sites are indexed row-major, ``site = y * Lx + x``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LatticeSpec:
    """Nearest-neighbour graph of an ``Lx x Ly`` lattice.

    ``coordination`` is the nominal number of neighbours per site that enters
    the ZZ normalisation of the Hamiltonian (2 for a chain, 4 for a square
    lattice), independent of collapsed bonds on width-2 tori.
    """

    Lx: int
    Ly: int
    periodic: bool
    edges: tuple[tuple[int, int], ...]
    coordination: int

    @property
    def n_sites(self) -> int:
        return self.Lx * self.Ly

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def site(self, x: int, y: int) -> int:
        return (y % self.Ly) * self.Lx + (x % self.Lx)

    def coords(self, i: int) -> tuple[int, int]:
        return i % self.Lx, i // self.Lx

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.intp).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {"Lx": self.Lx, "Ly": self.Ly, "periodic": self.periodic}


def build_lattice(Lx: int, Ly: int = 1, periodic: bool = True) -> LatticeSpec:
    """Build the nearest-neighbour bond list of an ``Lx x Ly`` lattice.

    Wrapped bonds that coincide with an existing bond (width-2 periodic
    dimensions) are stored once; wrapped self-loops (width 1) are dropped.

    Raises:
        ValueError: if a dimension is not positive or the lattice has fewer
            than two sites.
    """
    if Lx < 1 or Ly < 1:
        raise ValueError(f"lattice dimensions must be positive, got {Lx}x{Ly}")
    if Lx * Ly < 2:
        raise ValueError("a lattice needs at least two sites to carry bonds")

    edges: set[tuple[int, int]] = set()
    for y in range(Ly):
        for x in range(Lx):
            i = y * Lx + x
            for dx, dy in ((1, 0), (0, 1)):
                nx, ny = x + dx, y + dy
                if not periodic and (nx >= Lx or ny >= Ly):
                    continue
                j = (ny % Ly) * Lx + (nx % Lx)
                if i != j:
                    edges.add((min(i, j), max(i, j)))

    dims = int(Lx > 1) + int(Ly > 1)
    return LatticeSpec(
        Lx=Lx,
        Ly=Ly,
        periodic=periodic,
        edges=tuple(sorted(edges)),
        coordination=2 * dims,
    )


def single_site() -> LatticeSpec:
    """One isolated spin: no bonds, used for single-spin checks."""
    return LatticeSpec(Lx=1, Ly=1, periodic=False, edges=(), coordination=2)


@dataclass(frozen=True)
class SymmetryGroup:
    """A group of site permutations, one full index map per row.

    ``perms[g, i]`` is the image of site ``i`` under the ``g``-th element.
    ``fallback`` is set when a trivial group was substituted for a requested
    one (for example translations on an open lattice).
    """

    perms: np.ndarray
    fallback: bool = field(default=False, compare=False)

    def __post_init__(self):
        perms = np.ascontiguousarray(self.perms, dtype=np.intp)
        if perms.ndim != 2:
            raise ValueError("permutation table must be two-dimensional")
        n = perms.shape[1]
        if not np.all(np.sort(perms, axis=1) == np.arange(n)):
            raise ValueError("every row must be a bijection of 0..n-1")
        perms.setflags(write=False)
        object.__setattr__(self, "perms", perms)

    @property
    def order(self) -> int:
        return self.perms.shape[0]

    @property
    def n_sites(self) -> int:
        return self.perms.shape[1]

    def __len__(self) -> int:
        return self.order

    def inverses(self) -> np.ndarray:
        inv = np.empty_like(self.perms)
        rows = np.arange(self.order)[:, None]
        inv[rows, self.perms] = np.arange(self.n_sites)[None, :]
        return inv

    def contains(self, perm) -> bool:
        return bool(np.any(np.all(self.perms == np.asarray(perm), axis=1)))

    def is_closed(self) -> bool:
        """Exhaustive closure check under composition and inversion."""
        rows = {tuple(p) for p in self.perms}
        if tuple(range(self.n_sites)) not in rows:
            return False
        for p, q in itertools.product(self.perms, repeat=2):
            if tuple(p[q]) not in rows:
                return False
        return all(tuple(p) in rows for p in self.inverses())

    def preserves_edges(self, lattice: LatticeSpec) -> bool:
        edge_set = set(lattice.edges)
        for p in self.perms:
            for i, j in lattice.edges:
                a, b = p[i], p[j]
                if (min(a, b), max(a, b)) not in edge_set:
                    return False
        return True


def identity_group(n_sites: int) -> SymmetryGroup:
    return SymmetryGroup(np.arange(n_sites)[None, :])


def translation_group(lattice: LatticeSpec, point_group: bool = False) -> SymmetryGroup:
    """All torus translations of a periodic lattice.

    With ``point_group=True`` the reflections (and, on square lattices, the
    diagonal transpose) are added and the result is closed under composition.
    A non-periodic lattice yields the identity-only group with ``fallback``
    set and a ``UserWarning``.
    """
    n = lattice.n_sites
    if not lattice.periodic:
        warnings.warn(
            "translations are not a symmetry of an open lattice; using the identity group",
            UserWarning,
            stacklevel=2,
        )
        return SymmetryGroup(np.arange(n)[None, :], fallback=True)

    Lx, Ly = lattice.Lx, lattice.Ly
    xs = np.arange(n) % Lx
    ys = np.arange(n) // Lx
    perms = [
        ((ys + dy) % Ly) * Lx + (xs + dx) % Lx
        for dy in range(Ly)
        for dx in range(Lx)
    ]
    if point_group:
        generators = [((-ys) % Ly) * Lx + xs, ys * Lx + (-xs) % Lx]
        if Lx == Ly:
            generators.append(xs * Lx + ys)
        perms = _close(perms + generators)
    return SymmetryGroup(np.array(perms))


def _close(perms: list[np.ndarray]) -> list[np.ndarray]:
    seen = {tuple(p): p for p in perms}
    frontier = list(seen.values())
    while frontier:
        fresh = []
        for p in frontier:
            for q in list(seen.values()):
                for r in (p[q], q[p]):
                    key = tuple(r)
                    if key not in seen:
                        seen[key] = r
                        fresh.append(r)
        frontier = fresh
    identity = tuple(range(len(perms[0])))
    ordered = [seen.pop(identity)] if identity in seen else []
    ordered.extend(seen[k] for k in sorted(seen))
    return ordered
