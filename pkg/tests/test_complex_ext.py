import numpy as np
import pytest

from ksdft1d import (
    ComplexPotential,
    Grid,
    InteractionSpec,
    PotentialField,
    SelectionAmbiguityError,
    assemble_hamiltonian,
    complex_density,
    complex_ground,
    complex_invert,
    complex_response,
    dens,
    eigenvalue_property_residual,
    ground_state,
    holomorphy_check,
    invert_density,
)
from ksdft1d.complex_ext import complex_quotient_norm
from ksdft1d.grid import h1_norm

W = InteractionSpec.soft_coulomb()


@pytest.fixture(scope="module")
def g():
    return Grid(10)


@pytest.fixture(scope="module")
def v_re(g):
    return PotentialField(8 * np.cos(2 * np.pi * g.nodes))


def cpot(g, v_re, amp):
    return ComplexPotential.from_parts(v_re, PotentialField(amp * np.sin(np.pi * g.nodes)))


def test_real_sector_reduces_to_ground_state(g, v_re):
    sol = complex_ground(g, 2, v_re, W, 1.0)
    ref = ground_state(assemble_hamiltonian(g, 2, v_re, W, 1.0))
    assert sol.E.imag == 0.0 and sol.E.real == ref.E0
    np.testing.assert_array_equal(sol.psiL, sol.psiR)
    np.testing.assert_allclose(complex_density(sol), dens(ref.basis, ref.psi0), atol=0)


def test_constant_imaginary_shift(g, v_re):
    base = complex_ground(g, 2, cpot(g, v_re, 0.01), W, 1.0)
    c = 0.05
    shifted = complex_ground(g, 2, cpot(g, v_re, 0.01) + 1j * c, W, 1.0)
    assert shifted.E == pytest.approx(base.E + 2j * c, abs=1e-10)
    np.testing.assert_allclose(shifted.psiR, base.psiR, atol=1e-9)


@pytest.mark.parametrize("amp", [1e-4, 1e-3, 1e-2])
def test_projector_and_density_identities(g, v_re, amp):
    sol = complex_ground(g, 2, cpot(g, v_re, amp), W, complex(1.0, amp))
    P = sol.projector()
    assert np.max(np.abs(P @ P - P)) <= 1e-8
    assert abs(np.trace(P) - 1) <= 1e-8
    rho = complex_density(sol)
    assert abs(g.h * rho.sum() - 2) < 1e-10
    r, l = sol.residuals()
    assert max(r, l) < 1e-9


def test_conjugation_symmetry(g, v_re):
    v = cpot(g, v_re, 0.02)
    a = complex_density(complex_ground(g, 2, v, W, complex(1.0, 0.01)))
    b = complex_density(complex_ground(g, 2, v.conj(), W, complex(1.0, -0.01)))
    np.testing.assert_allclose(b, np.conj(a), atol=1e-10)


def test_eigenvalue_property_bilinear_only(g, v_re):
    sol = complex_ground(g, 2, cpot(g, v_re, 0.01), W, 1.0)
    res = eigenvalue_property_residual(sol)
    assert res["bilinear"] <= 1e-8
    assert res["sesquilinear"] > 1e-6


def test_ball_guard(g, v_re):
    with pytest.raises(SelectionAmbiguityError):
        complex_ground(g, 2, cpot(g, v_re, 5.0), W, 1.0)
    with pytest.raises(SelectionAmbiguityError):
        complex_ground(g, 2, v_re, W, complex(1.0, 1.0))


def test_complex_response_matches_differences(g, v_re):
    v = cpot(g, v_re, 0.01)
    u = PotentialField(3 * np.cos(np.pi * g.nodes))
    sol = complex_ground(g, 2, v, W, 1.0)
    exact = complex_response(sol, u)
    e = 1e-4
    rp = complex_density(complex_ground(g, 2, v + u * e, W, 1.0))
    rm = complex_density(complex_ground(g, 2, v - u * e, W, 1.0))
    assert h1_norm((rp - rm) / (2 * e) - exact, g) < 1e-6 * h1_norm(exact, g)


def test_complex_invert_real_target(g, v_re):
    rho = complex_density(complex_ground(g, 2, v_re, W, 1.0))
    a = complex_invert(g, 2, rho, W, 1.0)
    b = invert_density(g, 2, rho.real, W, 1.0)
    assert complex_quotient_norm(a.v - b.v, g) < 1e-8


def test_complex_roundtrip(g, v_re):
    v = cpot(g, v_re, 1e-2)
    lam = complex(1.0, 1e-2)
    rho = complex_density(complex_ground(g, 2, v, W, lam))
    res = complex_invert(g, 2, rho, W, lam)
    assert complex_quotient_norm(res.v - v, g) <= 1e-7


@pytest.mark.parametrize("quantity", ["density", "F"])
def test_cauchy_riemann_real_base(g, v_re, quantity):
    rep = holomorphy_check(g, 2, v_re, W, 1.0, PotentialField(np.cos(np.pi * g.nodes)), quantity=quantity)
    assert rep.min_order >= 0.9
    assert rep.residuals[0] / rep.residuals[1] == pytest.approx(2.0, rel=0.1)


def test_cauchy_riemann_coupling_direction(g, v_re):
    rep = holomorphy_check(g, 2, cpot(g, v_re, 0.01), W, 1.0, None, dlam=1.0)
    assert rep.min_order >= 0.9


def test_conjugated_density_fails(g, v_re):
    rep = holomorphy_check(g, 2, v_re, W, 1.0, PotentialField(np.cos(np.pi * g.nodes)), quantity="conj_density")
    assert rep.min_order < 0.5
    assert rep.residuals[-1] > 1e-2
