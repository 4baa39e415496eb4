"""Densities, mixed densities, the maps B and B*, pair densities and K.

With the cell basis a state is a coefficient vector ``c`` over index
tuples and the continuum reduced densities become

    rho(x_i)          = (1/h)   sum_{K ni i}       |c_K|^2
    rho2(x_i, x_j)    = (1/h^2) sum_{K sup {i,j}}  |c_K|^2      (i != j)

so that ``int rho = N``, ``iint rho2 = N(N-1)`` and
``int rho2(x, y) dx = (N-1) rho(y)`` hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, ConsistencyError, DensityError
from .grid import Grid, PotentialField, cosine_basis
from .manybody import Hamiltonian, TupleBasis

__all__ = [
    "dens",
    "mixed_density",
    "apply_B_adjoint",
    "pair_density",
    "pair_interaction",
    "k_operator",
    "k_kernel",
    "GramReport",
    "check_IplusK_invertible",
    "check_density",
    "density_floor",
]


def _accumulate(basis: TupleBasis, weights) -> np.ndarray:
    weights = np.asarray(weights)
    idx = basis.tuples.ravel()
    rep = np.repeat(weights, basis.N)
    if np.iscomplexobj(rep):
        return np.bincount(idx, rep.real, basis.n) + 1j * np.bincount(idx, rep.imag, basis.n)
    return np.bincount(idx, rep, basis.n)


def dens(basis: TupleBasis, psi) -> np.ndarray:
    """One-particle density of a state."""
    psi = np.asarray(psi)
    return _accumulate(basis, np.abs(psi) ** 2) * basis.n


def mixed_density(basis: TupleBasis, phi, psi) -> np.ndarray:
    """``B_psi(phi) = N int conj(psi) phi`` over all but one coordinate."""
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    if phi.shape != (basis.dim,) or psi.shape != (basis.dim,):
        raise ConfigurationError("state shape does not match the basis")
    return _accumulate(basis, np.conj(psi) * phi) * basis.n


def _as_values(f, n):
    if isinstance(f, PotentialField):
        return f.load()
    f = np.asarray(f)
    if f.shape != (n,):
        raise ConfigurationError("field does not match the grid")
    return f


def apply_B_adjoint(basis: TupleBasis, psi, f) -> np.ndarray:
    """``(B_psi^* f)_K = (sum_j f(x_{i_j})) psi_K``; a potential acts by its load."""
    return basis.sum_over_particles(_as_values(f, basis.n)) * np.asarray(psi)


def pair_density(basis: TupleBasis, psi) -> np.ndarray:
    """Pair density on the node grid, zero diagonal."""
    if basis.N < 2:
        raise ConfigurationError("pair density needs at least two particles")
    p = np.abs(np.asarray(psi)) ** 2
    out = np.zeros((basis.n, basis.n))
    t = basis.tuples
    for a, b in combinations(range(basis.N), 2):
        np.add.at(out, (t[:, a], t[:, b]), p)
    out = out + out.T
    return out * basis.n**2


def pair_interaction(grid: Grid, rho2, W) -> float:
    """``<rho2, w> = sum_{ij} h^2 rho2_ij W_ij``."""
    return float(grid.h**2 * np.sum(rho2 * W))


def density_floor(N: int) -> float:
    return 1e-8 * N


def check_density(grid: Grid, rho, N: int | None = None, tol: float = 1e-8) -> int:
    """Validate membership of the representable set; return ``N``."""
    rho = np.asarray(rho)
    if rho.shape != (grid.n,):
        raise DensityError("density does not match the grid")
    if np.iscomplexobj(rho):
        raise DensityError("real density expected")
    mass = grid.h * rho.sum()
    if N is None:
        N = int(round(mass))
    if N < 1 or abs(mass - N) > tol * max(1, N):
        raise DensityError(f"density integrates to {mass!r}, not a positive integer")
    if np.min(rho) < density_floor(N):
        raise DensityError(f"density not strictly positive (min {np.min(rho):.3e})")
    return N


def k_kernel(basis: TupleBasis, psi) -> np.ndarray:
    """Kernel samples ``rho2(x_i, x_j) / rho(x_j)``; columns integrate to ``N-1``."""
    rho = dens(basis, psi)
    if np.min(rho) < density_floor(basis.N):
        raise DensityError("density has a non-positive node; 1/rho undefined")
    if basis.N == 1:
        return np.zeros((basis.n, basis.n))
    return pair_density(basis, psi) / rho[None, :]


def k_operator(basis: TupleBasis, psi) -> np.ndarray:
    """Matrix of ``f -> int K(., y) f(y) dy`` with the quadrature weight folded in."""
    return k_kernel(basis, psi) / basis.n


@dataclass
class GramReport:
    sigma_min: float
    condition: float
    gram_residual: float
    gram_residual_zero_mean: float
    ground_state_plausible: bool
    caveats: list

    def to_dict(self) -> dict:
        return {
            "sigma_min": self.sigma_min,
            "condition": self.condition,
            "gram_residual": self.gram_residual,
            "gram_residual_zero_mean": self.gram_residual_zero_mean,
            "ground_state_plausible": self.ground_state_plausible,
            "caveats": list(self.caveats),
        }


def _looks_like_ground_state(psi, hamiltonian: Hamiltonian | None) -> tuple[bool, list]:
    caveats = []
    # Perron-Frobenius: hopping is sign-free on sorted tuples, so a ground
    # state has coefficients of a single sign.
    psi = np.asarray(psi)
    signed = psi * np.sign(psi[np.argmax(np.abs(psi))])
    ok = bool(np.all(signed > -1e-12 * np.max(np.abs(psi))))
    if not ok:
        caveats.append("not a ground state: coefficients change sign (nodal region)")
    if hamiltonian is not None:
        E = float(np.real(np.vdot(psi, hamiltonian.matvec(psi))))
        res = np.linalg.norm(hamiltonian.matvec(psi) - E * psi)
        if res > 1e-8 * (1 + abs(E)):
            ok = False
            caveats.append(f"not a ground state: eigen-residual {res:.2e}")
    return ok, caveats


def check_IplusK_invertible(
    basis: TupleBasis, psi, hamiltonian: Hamiltonian | None = None, tol: float = 1e-9
) -> GramReport:
    """Smallest singular value of ``I + K`` on zero-mean fields and the Gram identity.

    The matrix of ``f -> B_psi B_psi^*(f / rho)`` is assembled column by
    column through :func:`apply_B_adjoint` and :func:`mixed_density` and
    compared entrywise with ``I + K``.
    """
    n = basis.n
    grid = Grid(n)
    psi = np.asarray(psi)
    rho = dens(basis, psi)
    IK = np.eye(n) + k_operator(basis, psi)
    G = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0 / rho[j]
        G[:, j] = mixed_density(basis, apply_B_adjoint(basis, psi, e), psi).real
    Q = cosine_basis(grid)
    M_IK = grid.h * Q.T @ IK @ Q
    M_G = grid.h * Q.T @ G @ Q
    sv = np.linalg.svd(M_IK, compute_uv=False)
    plausible, caveats = _looks_like_ground_state(psi, hamiltonian)
    report = GramReport(
        sigma_min=float(sv[-1]),
        condition=float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf"),
        gram_residual=float(np.max(np.abs(G - IK))),
        gram_residual_zero_mean=float(np.max(np.abs(M_G - M_IK))),
        ground_state_plausible=plausible,
        caveats=caveats,
    )
    if report.sigma_min < 1e-10:
        report.caveats.append("numerical violation: sigma_min below 1e-10")
    if report.gram_residual > tol * max(1.0, np.max(np.abs(IK))):
        raise ConsistencyError(f"Gram identity violated by {report.gram_residual:.3e}")
    return report
