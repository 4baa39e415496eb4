"""Density-to-potential inversion by damped Newton and the Lipschitz probe."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .density import check_density, dens
from .errors import ConfigurationError, ConsistencyError, NonConvergenceError, SolverError
from .grid import Grid, PotentialField, cosine_basis, gauge_fix, h1_norm, quotient_norm
from .manybody import (
    Hamiltonian,
    InteractionSpec,
    SpectralSolution,
    TupleBasis,
    assemble_hamiltonian,
    ground_state,
)
from .response import assemble_lro, invert_lro

logger = logging.getLogger(__name__)

__all__ = [
    "InversionResult",
    "forward",
    "invert_density",
    "LipschitzReport",
    "lipschitz_probe",
    "random_zero_mean_direction",
    "HKReport",
    "hk_uniqueness_check",
]


@dataclass
class InversionResult:
    v: PotentialField
    iterations: int
    residual_history: list
    final_density: np.ndarray
    solution: SpectralSolution = field(repr=False)
    gaps: list = field(default_factory=list)
    damping_steps: list = field(default_factory=list)
    iterates: list = field(default_factory=list, repr=False)

    @property
    def residual(self) -> float:
        return self.residual_history[-1]

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_history": list(self.residual_history),
            "gaps": list(self.gaps),
            "damping_steps": list(self.damping_steps),
            "E0": self.solution.E0,
            "gap": self.solution.gap,
        }


def forward(hamiltonian: Hamiltonian) -> tuple[SpectralSolution, np.ndarray]:
    sol = ground_state(hamiltonian)
    return sol, dens(sol.basis, sol.psi0)


def invert_density(
    grid: Grid,
    N: int,
    rho_target,
    w: InteractionSpec | None = None,
    lam: float = 0.0,
    v0: PotentialField | None = None,
    tol: float = 1e-9,
    max_iter: int = 60,
    max_halvings: int = 30,
    basis: TupleBasis | None = None,
) -> InversionResult:
    """Potential (modulo constants) whose ground-state density is ``rho_target``.

    Newton steps ``v <- v - t * (D_v rho)^{-1} (rho(v) - rho_target)``
    with ``t`` halved until the H^1 residual decreases.
    """
    rho_target = np.asarray(rho_target, dtype=float)
    check_density(grid, rho_target, N)
    w = InteractionSpec.none() if w is None else w
    v = gauge_fix(PotentialField.zeros(grid) if v0 is None else v0)
    H = assemble_hamiltonian(grid, N, v, w, lam, basis=basis)
    sol, rho = forward(H)
    r = h1_norm(rho - rho_target, grid)
    history, gaps, damping, iterates = [r], [sol.gap], [], [v]
    it = 0
    while r > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"Newton did not converge in {max_iter} iterations", history)
        step = invert_lro(assemble_lro(sol), rho - rho_target)
        t = 1.0
        for halving in range(max_halvings + 1):
            trial = gauge_fix(v - step * t)
            try:
                trial_sol, trial_rho = forward(H.with_parameters(trial))
                trial_r = h1_norm(trial_rho - rho_target, grid)
            except SolverError:
                trial_r = np.inf
            if trial_r < r:
                break
            t *= 0.5
        else:
            raise NonConvergenceError(f"residual stagnated at {r:.3e} after line search", history)
        v, sol, rho, r = trial, trial_sol, trial_rho, trial_r
        it += 1
        history.append(r)
        gaps.append(sol.gap)
        damping.append(halving)
        iterates.append(v)
        logger.debug("newton %d: residual %.3e, damping halvings %d", it, r, halving)
    return InversionResult(
        v=v,
        iterations=it,
        residual_history=history,
        final_density=rho,
        solution=sol,
        gaps=gaps,
        damping_steps=damping,
        iterates=iterates,
    )


def random_zero_mean_direction(grid: Grid, rng, n_modes: int | None = None) -> np.ndarray:
    """Random smooth zero-mean field with unit H^1 norm.

    Cosine-mode coefficients are standard normal with ``1/k`` decay over
    the lowest ``n_modes`` modes (default ``n/4``).
    """
    Q = cosine_basis(grid)
    n_modes = max(1, grid.n // 4) if n_modes is None else n_modes
    k = np.arange(1, n_modes + 1)
    coeffs = rng.standard_normal(n_modes) / k
    sigma = Q[:, :n_modes] @ coeffs
    return sigma / h1_norm(sigma, grid)


@dataclass
class LipschitzReport:
    base_density: np.ndarray = field(repr=False)
    ensemble_size: int
    amplitudes: list
    seed: int
    ratios: dict
    max_ratio: dict
    stability: float
    rejected: dict
    failures: dict
    potential_norms: dict
    potential_spread: dict

    def to_dict(self) -> dict:
        return {
            "ensemble_size": self.ensemble_size,
            "amplitudes": self.amplitudes,
            "seed": self.seed,
            "max_ratio": {repr(a): r for a, r in self.max_ratio.items()},
            "stability": self.stability,
            "rejected": {repr(a): r for a, r in self.rejected.items()},
            "failures": {repr(a): r for a, r in self.failures.items()},
            "potential_spread": {repr(a): r for a, r in self.potential_spread.items()},
        }


def lipschitz_probe(
    grid: Grid,
    N: int,
    rho,
    w: InteractionSpec | None = None,
    lam: float = 0.0,
    ensemble_size: int = 20,
    amplitudes=(1e-2, 3e-3, 1e-3),
    seed: int = 0,
    directions=None,
    tol: float = 1e-10,
) -> LipschitzReport:
    """Empirical Lipschitz ratios of the density-to-potential map around ``rho``.

    The same seeded set of unit-H^1 directions is used at every amplitude,
    so ``stability`` (relative spread of the per-amplitude maximum ratio)
    isolates the amplitude dependence.  Perturbed densities that lose
    positivity are rejected; failed inversions are recorded, not raised.
    """
    rho = np.asarray(rho, dtype=float)
    check_density(grid, rho, N)
    rng = np.random.default_rng(seed)
    basis = TupleBasis(grid.n, N)
    if directions is None:
        directions = [random_zero_mean_direction(grid, rng) for _ in range(ensemble_size)]
    base = invert_density(grid, N, rho, w, lam, tol=tol, basis=basis)
    ratios, max_ratio, rejected, failures, norms, spread = {}, {}, {}, {}, {}, {}
    for a in amplitudes:
        ratios[a], rejected[a], failures[a], norms[a] = [], 0, [], []
        for s, sigma in enumerate(directions):
            drho_norm = a * h1_norm(sigma, grid)
            if drho_norm == 0.0:
                continue
            rho_p = rho + a * sigma
            if np.min(rho_p) <= 0:
                rejected[a] += 1
                continue
            try:
                res = invert_density(grid, N, rho_p, w, lam, v0=base.v, tol=tol, basis=basis)
            except (SolverError, ConfigurationError) as exc:
                failures[a].append((s, str(exc)))
                continue
            ratios[a].append(quotient_norm(res.v - base.v, grid) / drho_norm)
            norms[a].append(quotient_norm(res.v, grid))
        max_ratio[a] = max(ratios[a]) if ratios[a] else float("nan")
        spread[a] = max(norms[a]) / min(norms[a]) if norms[a] and min(norms[a]) > 0 else float("nan")
        logger.info("amplitude %.1e: max ratio %.6g over %d samples", a, max_ratio[a], len(ratios[a]))
    m = np.array([max_ratio[a] for a in amplitudes])
    stability = float((m.max() - m.min()) / m.max()) if np.all(np.isfinite(m)) else float("nan")
    return LipschitzReport(
        base_density=rho,
        ensemble_size=len(directions),
        amplitudes=[float(a) for a in amplitudes],
        seed=seed,
        ratios=ratios,
        max_ratio=max_ratio,
        stability=stability,
        rejected=rejected,
        failures=failures,
        potential_norms=norms,
        potential_spread=spread,
    )


@dataclass
class HKReport:
    potential_distance: float
    density_distance: float
    ratio: float | None
    skipped: bool
    distinct: bool | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def hk_uniqueness_check(
    grid: Grid,
    v1: PotentialField,
    v2: PotentialField,
    N: int,
    w: InteractionSpec | None = None,
    lam: float = 0.0,
    gauge_tol: float = 1e-12,
    density_tol: float = 1e-13,
) -> HKReport:
    """Distinct potential classes must give distinct ground-state densities.

    Potentials equal up to a constant skip the comparison; otherwise a
    density difference below ``density_tol`` raises ConsistencyError.
    """
    dv = quotient_norm(v1 - v2, grid)
    H1 = assemble_hamiltonian(grid, N, v1, w, lam)
    _, rho1 = forward(H1)
    _, rho2 = forward(H1.with_parameters(v2))
    drho = h1_norm(rho1 - rho2, grid)
    if dv <= gauge_tol * max(1.0, quotient_norm(v1, grid)):
        return HKReport(dv, drho, None, True, None)
    if not drho > density_tol:
        raise ConsistencyError(
            f"potentials {dv:.3e} apart in the quotient norm give densities only {drho:.3e} apart"
        )
    return HKReport(dv, drho, dv / drho, False, True)
