import numpy as np
import pytest

from ksdft1d import (
    ConsistencyError,
    DensityError,
    Grid,
    InteractionSpec,
    PotentialField,
    assemble_hamiltonian,
    forward,
    hk_uniqueness_check,
    invert_density,
    lipschitz_probe,
    quotient_norm,
)
from ksdft1d.inversion import random_zero_mean_direction
from ksdft1d.grid import h1_norm


def target(grid, N, v, w=None, lam=0.0):
    return forward(assemble_hamiltonian(grid, N, v, w, lam))[1]


def test_roundtrip_interacting_pair():
    g = Grid(32)
    v = PotentialField(20 * (g.nodes - 0.5) ** 2 + 3 * np.sin(3 * np.pi * g.nodes))
    w = InteractionSpec.soft_coulomb()
    res = invert_density(g, 2, target(g, 2, v, w, 1.0), w, 1.0)
    assert quotient_norm(res.v - v, g) <= 1e-7
    assert res.iterations <= 20


def test_uniform_density_gives_zero_potential():
    g = Grid(16)
    res = invert_density(g, 1, np.ones(16))
    assert res.iterations == 0
    assert quotient_norm(res.v, g) == 0.0


def test_density_with_node_is_rejected():
    g = Grid(16)
    rho = np.ones(16)
    rho[3] = 0.0
    rho *= 16 / rho.sum()
    with pytest.raises(DensityError):
        invert_density(g, 1, rho)


def test_accepted_steps_decrease_residual():
    g = Grid(16)
    v = PotentialField(15 * np.cos(2 * np.pi * g.nodes))
    res = invert_density(g, 2, target(g, 2, v, InteractionSpec.soft_coulomb(), 1.0), InteractionSpec.soft_coulomb(), 1.0)
    assert np.all(np.diff(res.residual_history) < 0)
    assert len(res.damping_steps) == res.iterations


def test_constant_shift_of_start_changes_nothing():
    g = Grid(16)
    v = PotentialField(8 * np.cos(2 * np.pi * g.nodes))
    rho = target(g, 1, v)
    v0 = PotentialField(np.sin(np.pi * g.nodes))
    a = invert_density(g, 1, rho, v0=v0)
    b = invert_density(g, 1, rho, v0=v0 + 11.0)
    assert a.iterations == b.iterations
    for x, y in zip(a.iterates, b.iterates):
        np.testing.assert_allclose(x.smooth, y.smooth, atol=1e-12)


def test_random_direction_is_zero_mean_unit(rng):
    g = Grid(24)
    s = random_zero_mean_direction(g, rng)
    assert abs(s.sum()) < 1e-12
    assert h1_norm(s, g) == pytest.approx(1.0)


def test_lipschitz_single_particle_cosine_target():
    g = Grid(16)
    rho = 1 + 0.2 * np.cos(2 * np.pi * g.nodes)
    rep = lipschitz_probe(g, 1, rho, ensemble_size=6, seed=7)
    assert all(np.isfinite(list(rep.max_ratio.values())))
    assert rep.stability <= 0.1
    assert all(s <= 10 for s in rep.potential_spread.values())


def test_lipschitz_skips_zero_direction_and_scale_invariance(rng):
    g = Grid(16)
    rho = 1 + 0.2 * np.cos(2 * np.pi * g.nodes)
    s = random_zero_mean_direction(g, rng)
    rep = lipschitz_probe(g, 1, rho, directions=[np.zeros(16), s], amplitudes=[1e-3])
    assert len(rep.ratios[1e-3]) == 1
    rep2 = lipschitz_probe(g, 1, rho, directions=[2 * s], amplitudes=[5e-4])
    assert rep2.max_ratio[5e-4] == pytest.approx(rep.max_ratio[1e-3], rel=1e-3)


def test_lipschitz_rejects_positivity_loss():
    g = Grid(16)
    rho = 1 + 0.2 * np.cos(2 * np.pi * g.nodes)
    s = np.cos(np.pi * g.nodes)
    rep = lipschitz_probe(g, 1, rho, directions=[s], amplitudes=[5.0, 1e-3])
    assert rep.rejected[5.0] == 1
    assert len(rep.ratios[1e-3]) == 1


def test_hk_gauge_pair_is_skipped():
    g = Grid(16)
    v = PotentialField(5 * np.cos(2 * np.pi * g.nodes))
    rep = hk_uniqueness_check(g, v, v + 4.0, 2, InteractionSpec.soft_coulomb(), 1.0)
    assert rep.skipped
    assert rep.density_distance < 1e-12


def test_hk_distinct_potentials_give_distinct_densities():
    g = Grid(16)
    v = PotentialField(5 * np.cos(2 * np.pi * g.nodes))
    bump = PotentialField(1e-3 * np.cos(3 * np.pi * g.nodes))
    rep = hk_uniqueness_check(g, v, v + bump, 2, InteractionSpec.soft_coulomb(), 1.0)
    assert rep.distinct and rep.density_distance > 0


def test_hk_mirror_symmetry():
    g = Grid(16)
    v = PotentialField(5 * np.cos(2 * np.pi * g.nodes) + 4 * g.nodes)
    w = InteractionSpec.soft_coulomb()
    rho = target(g, 2, v, w, 1.0)
    rho_m = target(g, 2, PotentialField(v.smooth[::-1]), w, 1.0)
    np.testing.assert_allclose(rho_m, rho[::-1], atol=1e-10)


def test_hk_raises_when_densities_coincide():
    g = Grid(16)
    v = PotentialField(5 * np.cos(2 * np.pi * g.nodes))
    u = PotentialField(1e-13 * np.cos(np.pi * g.nodes))
    with pytest.raises(ConsistencyError):
        hk_uniqueness_check(g, v, v + u, 1, gauge_tol=0.0, density_tol=1e-9)
