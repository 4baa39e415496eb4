import numpy as np
import pytest
from hypothesis import given, strategies as st

from ksdft1d import (
    Grid,
    InteractionSpec,
    PotentialField,
    assemble_hamiltonian,
    assemble_lro,
    dens,
    gauge_fix,
    ground_state,
    h1_norm,
    invert_lro,
    lro_apply,
    projector_derivative,
    spectrum,
)
from ksdft1d.response import lro_sum_over_states, projector_derivative_check


@pytest.fixture(scope="module")
def sol():
    g = Grid(16)
    v = PotentialField(5 * np.cos(2 * np.pi * g.nodes))
    return ground_state(assemble_hamiltonian(g, 2, v, InteractionSpec.soft_coulomb(), 1.0))


@pytest.fixture(scope="module")
def R(sol):
    return assemble_lro(sol)


def test_zero_and_constant_perturbations_give_no_response(sol):
    g = sol.grid
    assert np.max(np.abs(lro_apply(sol, np.zeros(g.n)))) == 0.0
    assert np.max(np.abs(lro_apply(sol, np.full(g.n, 3.0)))) < 1e-10
    assert np.max(np.abs(lro_apply(sol, PotentialField(np.full(g.n, -2.0))))) < 1e-10


def test_response_output_is_zero_mean(sol, rng):
    d = lro_apply(sol, rng.normal(size=sol.grid.n))
    assert abs(d.sum() * sol.grid.h) < 1e-12


def test_response_matches_central_differences(sol):
    g = sol.grid
    H = sol.hamiltonian
    u = PotentialField(30 * (np.cos(np.pi * g.nodes) + 0.5 * np.cos(2 * np.pi * g.nodes)))
    exact = lro_apply(sol, u)
    errs = []
    for eps in (1e-3, 5e-4):
        rp = dens(H.basis, ground_state(H.with_parameters(H.potential + u * eps)).psi0)
        rm = dens(H.basis, ground_state(H.with_parameters(H.potential - u * eps)).psi0)
        errs.append(h1_norm((rp - rm) / (2 * eps) - exact, g))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)


def test_matrix_symmetric_negative_definite(R):
    rep = R.report()
    assert rep["asymmetry"] < 1e-9
    assert rep["negative_definite"]
    assert rep["condition"] < 1e12


def test_matrix_matches_sum_over_states(sol, R):
    H = sol.hamiltonian
    E, V, _ = spectrum(H, H.dim)
    Q = R.basis
    for l in (0, 3, 7):
        col = lro_sum_over_states(sol, E, V, Q[:, l])
        np.testing.assert_allclose(sol.grid.h * Q.T @ col, R.M[:, l], atol=1e-10)


def test_single_particle_response_diagonal_in_cosines():
    # free particle: only the k-th cosine couples to the k-th excited state
    g = Grid(12)
    sol = ground_state(assemble_hamiltonian(g, 1, PotentialField.zeros(g), None, 0.0))
    R = assemble_lro(sol)
    E, V, _ = spectrum(sol.hamiltonian, g.n)
    omega = E[1:] - E[0]
    np.testing.assert_allclose(np.diag(R.M), -2 / omega, rtol=1e-10)
    assert np.max(np.abs(R.M - np.diag(np.diag(R.M)))) < 1e-10


@given(st.integers(0, 2**31 - 1))
def test_invert_roundtrip(seed):
    g = Grid(12)
    v = PotentialField(5 * np.cos(2 * np.pi * g.nodes))
    sol = ground_state(assemble_hamiltonian(g, 2, v, InteractionSpec.yukawa(1.0, 2.0), 1.0))
    R = assemble_lro(sol)
    u = gauge_fix(PotentialField(np.random.default_rng(seed).normal(size=12)))
    back = invert_lro(R, lro_apply(sol, u))
    np.testing.assert_allclose(back.smooth, u.smooth, atol=1e-8)


def test_invert_zero_and_columns(sol, R):
    assert np.max(np.abs(invert_lro(R, np.zeros(sol.grid.n)).smooth)) == 0.0
    Q = R.basis
    for l in (0, 5):
        u = invert_lro(R, lro_apply(sol, Q[:, l]))
        coeffs = sol.grid.h * Q.T @ u.smooth
        np.testing.assert_allclose(coeffs, np.eye(Q.shape[1])[l], atol=1e-8)


def test_projector_derivative_zero_and_trace(sol, rng):
    D0 = projector_derivative(sol, np.zeros(sol.grid.n), 0.0)
    assert np.max(np.abs(D0)) == 0.0
    D = projector_derivative(sol, rng.normal(size=sol.grid.n), 0.3)
    assert abs(np.trace(D)) < 1e-12
    np.testing.assert_allclose(D, D.T)


def test_projector_derivative_second_order():
    g = Grid(10)
    H = assemble_hamiltonian(g, 2, PotentialField(5 * np.cos(2 * np.pi * g.nodes)), InteractionSpec.soft_coulomb(), 1.0)
    sol = ground_state(H)
    u = PotentialField(30 * np.cos(np.pi * g.nodes))
    rep = projector_derivative_check(sol, u, mu=0.5)
    assert all(abs(f - 4) < 1.2 for f in rep.factors)
    assert abs(rep.trace) < 1e-12
