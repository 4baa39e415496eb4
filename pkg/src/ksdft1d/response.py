"""Linear response ``D_v rho = 2 B R_perp B^*`` and the projector derivative.

Zero-mean potentials and density variations are both expressed in the
orthonormal cosine basis of :func:`ksdft1d.grid.cosine_basis`, so the
response matrix is the ``(n-1) x (n-1)`` Galerkin matrix
``M_kl = <phi_k, D_v rho(phi_l)>``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .density import apply_B_adjoint, mixed_density
from .errors import ConsistencyError, IllConditionedError
from .grid import PotentialField, cosine_basis, gauge_fix
from .manybody import (
    InteractionSpec,
    SpectralSolution,
    assemble_hamiltonian,
    ground_state,
    reduced_resolvent_apply,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ResponseMatrix",
    "lro_apply",
    "assemble_lro",
    "invert_lro",
    "lro_sum_over_states",
    "projector_derivative",
    "projector_derivative_check",
    "ProjectorDerivativeReport",
    "COND_LIMIT",
]

COND_LIMIT = 1e12


def _values(u, n):
    return u.load() if isinstance(u, PotentialField) else np.asarray(u)


def lro_apply(sol: SpectralSolution, u) -> np.ndarray:
    """Density response to the potential increment ``u``."""
    basis, psi = sol.basis, sol.psi0
    x = reduced_resolvent_apply(sol, apply_B_adjoint(basis, psi, _values(u, basis.n)))
    return 2.0 * mixed_density(basis, x, psi).real


@dataclass
class ResponseMatrix:
    """Response matrix in cosine coordinates plus its spectral diagnostics."""

    M: np.ndarray
    basis: np.ndarray
    solution: SpectralSolution = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    asymmetry: float = 0.0

    @property
    def condition(self) -> float:
        ev = np.abs(self.eigenvalues)
        return float(ev.max() / ev.min())

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues.max())

    def report(self) -> dict:
        return {
            "size": int(self.M.shape[0]),
            "condition": self.condition,
            "max_eigenvalue": self.max_eigenvalue,
            "min_eigenvalue": float(self.eigenvalues.min()),
            "asymmetry": self.asymmetry,
            "negative_definite": bool(self.max_eigenvalue < 0),
        }


def assemble_lro(sol: SpectralSolution, sym_tol: float = 1e-9) -> ResponseMatrix:
    """Apply the response to every cosine mode and check symmetry and sign."""
    basis, psi = sol.basis, sol.psi0
    grid = sol.grid
    Q = cosine_basis(grid)
    loads = basis.sum_over_particles(Q) * psi[:, None]
    X = reduced_resolvent_apply(sol, loads)
    drho = 2.0 * np.stack([mixed_density(basis, X[:, l], psi).real for l in range(Q.shape[1])], axis=1)
    M = grid.h * Q.T @ drho
    scale = np.max(np.abs(M))
    asym = float(np.max(np.abs(M - M.T)) / scale)
    if asym > sym_tol:
        raise ConsistencyError(f"response matrix asymmetric: relative {asym:.3e}")
    M = 0.5 * (M + M.T)
    ev = np.linalg.eigvalsh(M)
    if not ev.max() < 0:
        raise ConsistencyError(f"response matrix not negative definite (max eigenvalue {ev.max():.3e})")
    return ResponseMatrix(M=M, basis=Q, solution=sol, eigenvalues=ev, asymmetry=asym)


def invert_lro(R: ResponseMatrix, drho, cond_limit: float = COND_LIMIT) -> PotentialField:
    """Zero-mean potential ``u`` with ``D_v rho(u) = drho``."""
    if R.condition > cond_limit:
        raise IllConditionedError(
            f"response matrix condition {R.condition:.3e} exceeds {cond_limit:.1e}; "
            f"eigenvalues in [{R.eigenvalues.min():.3e}, {R.eigenvalues.max():.3e}]"
        )
    drho = np.asarray(drho)
    h = 1.0 / drho.size
    b = h * R.basis.T @ drho
    a = np.linalg.solve(R.M, b)
    return gauge_fix(PotentialField(R.basis @ a))


def lro_sum_over_states(sol: SpectralSolution, energies, states, u) -> np.ndarray:
    """Response from an explicit eigen-decomposition (independent oracle).

    ``D_v rho(u) = -2 sum_{j>=1} <Psi_j, u_hat Psi_0> / omega_j B_{Psi_0}(Psi_j)``.
    """
    basis = sol.basis
    psi0 = states[:, 0]
    upsi = apply_B_adjoint(basis, psi0, _values(u, basis.n))
    out = np.zeros(basis.n)
    for j in range(1, states.shape[1]):
        omega = energies[j] - energies[0]
        out += -2.0 / omega * (states[:, j] @ upsi) * mixed_density(basis, states[:, j], psi0).real
    return out


def projector_derivative(sol: SpectralSolution, u, mu: float = 0.0) -> np.ndarray:
    """Dense first-order increment ``R(u+mu w)P + P(u+mu w)R`` of ``P = |Psi><Psi|``."""
    H = sol.hamiltonian
    psi = sol.psi0
    pert = H.basis.sum_over_particles(_values(u, H.grid.n)) + mu * H.interaction_diag
    X = reduced_resolvent_apply(sol, pert * psi)
    return np.outer(X, psi) + np.outer(psi, X)


@dataclass
class ProjectorDerivativeReport:
    eps: list
    residuals: list
    factors: list
    trace: float

    def to_dict(self) -> dict:
        return {"eps": self.eps, "residuals": self.residuals, "factors": self.factors, "trace": self.trace}


def projector_derivative_check(
    sol: SpectralSolution,
    u: PotentialField,
    mu: float = 0.0,
    w: InteractionSpec | None = None,
    eps=(1e-3, 5e-4, 2.5e-4),
) -> ProjectorDerivativeReport:
    """Compare the projector-derivative formula with central differences.

    Residuals are max-abs entry differences; ``factors`` are the ratios
    between consecutive residuals (4 for second-order agreement).
    """
    H = sol.hamiltonian
    if w is not None and w != H.interaction:
        H = assemble_hamiltonian(H.grid, H.N, H.potential, w, H.lam)
        sol = ground_state(H)
    D = projector_derivative(sol, u, mu)
    residuals = []
    for e in eps:
        plus = ground_state(H.with_parameters(H.potential + u * e, H.lam + mu * e)).psi0
        minus = ground_state(H.with_parameters(H.potential - u * e, H.lam - mu * e)).psi0
        fd = (np.outer(plus, plus) - np.outer(minus, minus)) / (2 * e)
        residuals.append(float(np.max(np.abs(fd - D))))
    factors = [residuals[i] / residuals[i + 1] if residuals[i + 1] > 0 else float("inf") for i in range(len(eps) - 1)]
    return ProjectorDerivativeReport(
        eps=[float(e) for e in eps], residuals=residuals, factors=factors, trace=float(np.trace(D))
    )
