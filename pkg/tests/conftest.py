from __future__ import annotations

import warnings

import numpy as np
import pytest

from vmcs.ansatz import VariationalState


def sphere_rule(n_theta: int = 8, n_phi: int = 16):
    """Gauss-Legendre in cos(theta) times trapezoid in phi; weights sum to 4 pi.

    Exact for polynomials in n of degree < min(2 n_theta, n_phi).
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1 - ct**2)
    pts = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    wts = np.repeat(w, n_phi) * (2 * np.pi / n_phi)
    return pts, wts


def product_rule(n_sites: int, n_theta: int = 6, n_phi: int = 8):
    """Tensor-product rule on (S^2)^n: points (M, n, 3) and weights (M,)."""
    pts, wts = sphere_rule(n_theta, n_phi)
    grids = np.meshgrid(*[np.arange(len(wts))] * n_sites, indexing="ij")
    idx = np.stack([g.reshape(-1) for g in grids], axis=-1)
    return pts[idx], np.prod(wts[idx], axis=-1)


def random_state(rng, n_comp: int, n_sites: int, scale: float = 1.0) -> VariationalState:
    c = rng.normal(size=n_comp)
    c = c / c.sum() if abs(c.sum()) > 0.1 else np.full(n_comp, 1.0 / n_comp) + 0.1 * c
    m = rng.normal(size=(n_comp, n_sites, 3))
    m *= scale * rng.uniform(0.2, 1.0, size=(n_comp, n_sites, 1)) / np.linalg.norm(m, axis=-1, keepdims=True)
    return VariationalState(c, m)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _quiet_norm_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Bloch norm")
        yield


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
