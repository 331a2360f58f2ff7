from __future__ import annotations

import numpy as np
import pytest

from conftest import random_state
from vmcs.ansatz import VariationalState
from vmcs.exact import density_from_state, exact_correlator, exact_magnetizations
from vmcs.lattice import build_lattice, translation_group
from vmcs.observables import ObservableRecord, all_magnetizations, site_magnetization, two_site_correlator

Z = np.array([0.0, 0.0, 1.0])


def test_coherent_state():
    np.testing.assert_array_equal(site_magnetization(VariationalState([1.0], [[Z]]), None, 0), Z)


def test_symmetric_mixture_is_unpolarised():
    state = VariationalState([0.5, 0.5], [[Z], [-Z]])
    np.testing.assert_array_equal(site_magnetization(state, None, 0), 0.0)


def test_negative_coefficient_arithmetic():
    state = VariationalState([2.0, -1.0], [[[0, 0, 0.5]], [[0, 0, 0.8]]])
    assert site_magnetization(state, None, 0)[2] == pytest.approx(0.2, abs=1e-15)


def test_index_out_of_range():
    with pytest.raises(IndexError):
        site_magnetization(VariationalState([1.0], [[Z]]), None, 1)


def test_product_state_correlator():
    state = VariationalState([1.0], [[Z, Z]])
    assert two_site_correlator(state, None, 0, 1, "z", "z") == 1.0


def test_classical_correlation():
    state = VariationalState([0.5, 0.5], [[Z, Z], [-Z, -Z]])
    assert two_site_correlator(state, None, 0, 1, "z", "z") == 1.0
    np.testing.assert_array_equal(all_magnetizations(state), 0.0)


def test_same_site_rejected():
    with pytest.raises(ValueError):
        two_site_correlator(VariationalState([1.0], [[Z, Z]]), None, 1, 1, 2, 2)


def _physical_state(rng, K, N):
    state = random_state(rng, K, N)
    return VariationalState(np.abs(state.c) / np.abs(state.c).sum(), state.m)


@pytest.mark.parametrize("axes", [(2, 2), (0, 1), (1, 2), (0, 0)])
def test_correlator_matches_density_operator(rng, axes):
    state = _physical_state(rng, 3, 2)
    rho = density_from_state(state)
    assert abs(two_site_correlator(state, None, 0, 1, *axes) - exact_correlator(rho, 0, 1, *axes)) < 1e-12


def test_magnetizations_match_density_operator(rng):
    lat = build_lattice(2, 2)
    grp = translation_group(lat)
    for _ in range(5):
        state = _physical_state(rng, 2, 4)
        for g in (None, grp):
            rho = density_from_state(state, g)
            np.testing.assert_allclose(all_magnetizations(state, g), exact_magnetizations(rho), atol=1e-13)


def test_symmetric_evaluation_is_uniform(rng):
    lat = build_lattice(3, 3)
    state = random_state(rng, 4, 9)
    sites = all_magnetizations(state, translation_group(lat))
    assert np.max(np.abs(sites - sites[0])) < 1e-14


def test_site_and_bulk_agree(rng):
    grp = translation_group(build_lattice(4, 1))
    state = random_state(rng, 2, 4)
    bulk = all_magnetizations(state, grp)
    for i in range(4):
        np.testing.assert_allclose(site_magnetization(state, grp, i), bulk[i], atol=1e-15)


def test_record_average(rng):
    state = random_state(rng, 3, 5)
    rec = ObservableRecord.from_state(state, pairs=[(0, 1, "z", "z"), (1, 3, 0, 2)])
    assert np.max(np.abs(rec.average - rec.sites.mean(axis=0))) <= 1e-14
    assert set(rec.correlators) == {(0, 1, "z", "z"), (1, 3, 0, 2)}
