from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import product_rule, random_state
from vmcs.ansatz import (
    DegenerateStateError,
    PhasePoint,
    VariationalState,
    evaluate_q,
    init_product_state,
    load_state,
    renormalize,
    save_state,
)
from vmcs.lattice import build_lattice, translation_group


def test_unperturbed_product_state():
    st_ = init_product_state(build_lattice(3, 1), 1, perturbation=0.0)
    np.testing.assert_array_equal(st_.c, [1.0])
    np.testing.assert_array_equal(st_.m, np.tile([1.0, 0.0, 0.0], (1, 3, 1)))


def test_fig2_parameter_count():
    state = init_product_state(build_lattice(16, 1), 16, perturbation=0.01, seed=7)
    assert state.n_params == 784
    assert state.c.sum() == pytest.approx(1.0, abs=1e-12)


def test_fig4_parameter_count():
    assert init_product_state(build_lattice(8, 8), 2, perturbation=0.01, seed=1).n_params == 386
    assert init_product_state(64, 4).n_params == 772
    assert init_product_state(64, 6).n_params == 1158


def test_init_is_seed_deterministic():
    a = init_product_state(9, 5, perturbation=0.2, seed=3)
    b = init_product_state(9, 5, perturbation=0.2, seed=3)
    assert a.to_vector().tobytes() == b.to_vector().tobytes()
    c = init_product_state(9, 5, perturbation=0.2, seed=4)
    assert not np.array_equal(a.m, c.m)


def test_init_respects_bloch_ball_and_noise_bound():
    direction = np.array([0.0, 0.6, 0.8])
    state = init_product_state(20, 6, direction=direction, perturbation=0.3, seed=0)
    assert state.max_bloch_norm() <= 1.0 + 1e-15
    # noise of at most 0.3 per component, plus the shift from pulling back into the ball
    assert np.all(np.linalg.norm(state.m - direction, axis=-1) <= 2 * np.sqrt(3) * 0.3 + 1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_components=0), dict(n_components=2, perturbation=0.5), dict(n_components=2, direction=(1.0, 1.0, 0.0))],
)
def test_init_rejects_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        init_product_state(4, **kwargs)


def test_evaluate_q_examples():
    z = np.array([[0.0, 0.0, 1.0]])
    assert evaluate_q(VariationalState([1.0], [z]), z) == pytest.approx(1 / (2 * np.pi))
    flat = VariationalState([1.0], [[[0.0, 0.0, 0.0]]])
    for n in ([[1.0, 0.0, 0.0]], [[0.0, -1.0, 0.0]]):
        assert evaluate_q(flat, np.array(n)) == pytest.approx(1 / (4 * np.pi))
    mixed = VariationalState([0.5, 0.5], [z, -z])
    assert evaluate_q(mixed, PhasePoint.from_angles(0.7, 1.1)) == pytest.approx(1 / (4 * np.pi))


@pytest.mark.parametrize("n_sites,n_comp", [(1, 3), (2, 2)])
def test_q_integrates_to_sum_of_coefficients(rng, n_sites, n_comp):
    state = random_state(rng, n_comp, n_sites)
    state = VariationalState(state.c * 1.7, state.m)
    pts, wts = product_rule(n_sites, 3, 4)
    vals = np.array([evaluate_q(state, p) for p in pts])
    assert np.dot(vals, wts) == pytest.approx(state.c.sum(), rel=1e-12)


def test_symmetrisation_is_idempotent_on_symmetric_states(rng):
    lat = build_lattice(3, 2)
    grp = translation_group(lat)
    m = rng.normal(size=(3, 1, 3)) * 0.4
    state = VariationalState([0.2, 0.5, 0.3], np.repeat(m, lat.n_sites, axis=1))
    for _ in range(5):
        n = rng.normal(size=(6, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        assert abs(evaluate_q(state, n, grp) - evaluate_q(state, n)) < 1e-14


def test_symmetrised_q_is_translation_invariant(rng):
    lat = build_lattice(4, 1)
    grp = translation_group(lat)
    state = random_state(rng, 3, 4)
    n = rng.normal(size=(4, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    ref = evaluate_q(state, n, grp)
    for p in grp.perms:
        assert evaluate_q(state, n[p], grp) == pytest.approx(ref, rel=1e-13)


def test_renormalize_examples():
    np.testing.assert_allclose(renormalize(VariationalState([0.5, 0.6], np.zeros((2, 1, 3)))).c, [5 / 11, 6 / 11])
    np.testing.assert_array_equal(renormalize(VariationalState([2.0, -1.0], np.zeros((2, 1, 3)))).c, [2.0, -1.0])
    with pytest.raises(DegenerateStateError):
        renormalize(VariationalState([1e-13, -1e-13], np.zeros((2, 1, 3))))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6))
def test_renormalize_property(cs):
    c = np.array(cs)
    state = VariationalState(c, np.zeros((c.size, 2, 3)))
    if abs(c.sum()) < 1e-12:
        with pytest.raises(DegenerateStateError):
            renormalize(state)
        return
    out = renormalize(state)
    assert out.c.sum() == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_array_equal(out.m, state.m)


def test_negative_coefficients_allowed():
    state = VariationalState([2.0, -1.0], np.zeros((2, 1, 3)))
    assert state.c[1] < 0


def test_vector_round_trip(rng):
    state = random_state(rng, 3, 4)
    theta = state.to_vector()
    assert theta[:3].tolist() == state.c.tolist()
    assert theta[3:6].tolist() == state.m[0, 0].tolist()  # m_11x, m_11y, m_11z
    back = VariationalState.from_vector(theta, 3, 4)
    np.testing.assert_array_equal(back.m, state.m)
    with pytest.raises(ValueError):
        VariationalState.from_vector(theta[:-1], 3, 4)


def test_state_is_immutable(rng):
    state = random_state(rng, 2, 2)
    with pytest.raises(ValueError):
        state.m[0, 0, 0] = 1.0


def test_phase_point_validation():
    with pytest.raises(ValueError):
        PhasePoint(np.array([[1.0, 1.0, 0.0]]))
    p = PhasePoint.from_angles([0.3, 2.0], [1.0, -2.5])
    theta, phi = p.angles()
    np.testing.assert_allclose(theta, [0.3, 2.0])
    np.testing.assert_allclose(phi, [1.0, -2.5])


def test_snapshot_round_trip(tmp_path, rng):
    lat = build_lattice(2, 2)
    state = random_state(rng, 2, 4)
    save_state(tmp_path / "s.json", state, lat)
    back, lat2 = load_state(tmp_path / "s.json")
    assert back.to_vector().tobytes() == state.to_vector().tobytes()
    assert lat2 == lat
