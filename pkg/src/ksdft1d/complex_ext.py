"""Complex potentials: non-self-adjoint ground pairs, densities and inversion.

For a complex potential the grid Hamiltonian is complex symmetric
(``H.T == H``), so the left eigenvector is the conjugate of the right one.
Pairs are binormalised, ``<psiL, psiR> = psiL^H psiR = 1``, and the
associated rank-one projector is ``P = psiR psiL^H``.  The density of
``P`` is the mixed density ``(1/h) sum_{K ni i} conj(psiL_K) psiR_K``,
which depends holomorphically on ``(v, lam)``.

Only a small ball around the real sector is accepted: the selection of
the eigenvalue with smallest real part is not known to be meaningful far
from it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .density import check_density, mixed_density
from .errors import (
    ConfigurationError,
    NonConvergenceError,
    SelectionAmbiguityError,
    SolverError,
)
from .grid import Grid, PotentialField, cosine_basis, h1_norm, quotient_norm
from .inversion import invert_density
from .manybody import (
    DENSE_LIMIT,
    GAP_FLOOR,
    Hamiltonian,
    InteractionSpec,
    TupleBasis,
    assemble_hamiltonian,
    ground_state,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ComplexPotential",
    "ComplexEigenSolution",
    "complex_ground",
    "complex_density",
    "complex_response",
    "eigenvalue_property_residual",
    "complex_quotient_norm",
    "ComplexInversionResult",
    "complex_invert",
    "HolomorphyReport",
    "holomorphy_check",
    "MAX_IMAG",
    "BINORM_FLOOR",
]

MAX_IMAG = 0.1
BINORM_FLOOR = 1e-6


class ComplexPotential(PotentialField):
    """Complex distributional potential; real potentials are a special case."""

    _dtype = complex

    def _dtype_for(self, values):
        return complex

    def _scalar(self, value):
        return complex(value)

    @classmethod
    def from_parts(cls, real: PotentialField, imag: PotentialField | None = None) -> "ComplexPotential":
        imag = PotentialField.zeros(Grid(real.n)) if imag is None else imag
        atoms = {}
        for idx, w in real.atoms:
            atoms[idx] = atoms.get(idx, 0) + w
        for idx, w in imag.atoms:
            atoms[idx] = atoms.get(idx, 0) + 1j * w
        return cls(real.smooth + 1j * imag.smooth, tuple(sorted(atoms.items())))

    @property
    def real(self) -> PotentialField:
        return PotentialField(self.smooth.real, tuple((i, w.real) for i, w in self.atoms))

    @property
    def imag(self) -> PotentialField:
        return PotentialField(self.smooth.imag, tuple((i, w.imag) for i, w in self.atoms))

    def conj(self) -> "ComplexPotential":
        return ComplexPotential(self.smooth.conj(), tuple((i, np.conj(w)) for i, w in self.atoms))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "smooth_re": [float(x) for x in self.smooth.real],
            "smooth_im": [float(x) for x in self.smooth.imag],
            "atoms": [[i, float(w.real), float(w.imag)] for i, w in self.atoms],
        }


def as_complex(v) -> ComplexPotential:
    if isinstance(v, ComplexPotential):
        return v
    return ComplexPotential(v.smooth, v.atoms)


def complex_quotient_norm(v: PotentialField, grid: Grid) -> float:
    """Quotient norm modulo complex constants (real and imaginary parts in quadrature)."""
    v = as_complex(v)
    return float(np.hypot(quotient_norm(v.real, grid), quotient_norm(v.imag, grid)))


@dataclass(eq=False)
class ComplexEigenSolution:
    hamiltonian: Hamiltonian
    E: complex
    psiR: np.ndarray
    psiL: np.ndarray
    realgap: float
    others: np.ndarray = field(repr=False)
    _lu: tuple | None = field(default=None, repr=False)

    @property
    def basis(self) -> TupleBasis:
        return self.hamiltonian.basis

    @property
    def grid(self) -> Grid:
        return self.hamiltonian.grid

    def projector(self) -> np.ndarray:
        return np.outer(self.psiR, self.psiL.conj())

    def residuals(self) -> tuple[float, float]:
        H = self.hamiltonian.matrix
        right = np.linalg.norm(H @ self.psiR - self.E * self.psiR)
        left = np.linalg.norm(H.conj().T @ self.psiL - np.conj(self.E) * self.psiL)
        return float(right), float(left)

    def F(self) -> complex:
        """``F_C = <psiL, H(0, lam w) psiR>``."""
        H = self.hamiltonian
        return complex(np.vdot(self.psiL, H.kinetic @ self.psiR + H.lam * H.interaction_diag * self.psiR))

    def _bordered(self, left=False):
        H = self.hamiltonian.dense()
        dim = H.shape[0]
        A = np.zeros((dim + 1, dim + 1), dtype=complex)
        if left:
            A[:dim, :dim] = np.conj(self.E) * np.eye(dim) - H.conj().T
            A[:dim, dim] = self.psiL
            A[dim, :dim] = self.psiR.conj()
        else:
            A[:dim, :dim] = self.E * np.eye(dim) - H
            A[:dim, dim] = self.psiR
            A[dim, :dim] = self.psiL.conj()
        return sla.lu_factor(A)

    def resolvent(self, F, left=False) -> np.ndarray:
        """Reduced resolvent for the right (or left) eigenproblem.

        Returns ``x`` with ``(E - H) x = (1 - P) F`` and ``psiL^H x = 0``
        (for ``left``: ``(E* - H^H) x = (1 - P^H) F`` and ``psiR^H x = 0``).
        """
        if self._lu is None:
            self._lu = (self._bordered(False), self._bordered(True))
        lu = self._lu[1 if left else 0]
        F = np.asarray(F, dtype=complex)
        if left:
            PF = F - self.psiL * np.vdot(self.psiR, F)
        else:
            PF = F - self.psiR * np.vdot(self.psiL, F)
        rhs = np.concatenate([PF, [0.0]])
        return sla.lu_solve(lu, rhs)[:-1]


def _ball_check(grid, v, lam, max_imag):
    v = as_complex(v)
    im = quotient_norm(v.imag, grid)
    if im > max_imag or abs(np.imag(lam)) > max_imag:
        raise SelectionAmbiguityError(
            f"imaginary parts (potential {im:.3g}, coupling {abs(np.imag(lam)):.3g}) exceed {max_imag}; "
            "eigenvalue selection is only trusted near the real sector"
        )


def complex_ground(
    grid: Grid,
    N: int,
    v: PotentialField,
    w: InteractionSpec | None = None,
    lam: complex = 0.0,
    max_imag: float = MAX_IMAG,
    gap_floor: float = GAP_FLOOR,
    basis: TupleBasis | None = None,
    real_shortcut: bool = True,
) -> ComplexEigenSolution:
    """Eigenvalue with smallest real part and its binormalised left/right pair.

    Real data go through the symmetric solver unless ``real_shortcut`` is
    off, in which case the general non-symmetric path is used throughout.
    """
    _ball_check(grid, v, lam, max_imag)
    v = as_complex(v)
    is_real = not np.any(v.smooth.imag) and not any(np.imag(a) for _, a in v.atoms) and np.imag(lam) == 0
    if real_shortcut and is_real:
        H = assemble_hamiltonian(grid, N, v.real, w, float(np.real(lam)), basis=basis)
        sol = ground_state(H, gap_floor=gap_floor)
        psi = sol.psi0.astype(complex)
        return ComplexEigenSolution(H, complex(sol.E0), psi, psi.copy(), sol.gap, sol.energies[1:].astype(complex))
    H = assemble_hamiltonian(grid, N, v, w, lam, basis=basis)
    if H.dim <= DENSE_LIMIT:
        vals, vecs = sla.eig(H.dense())
    else:
        ref = ground_state(assemble_hamiltonian(grid, N, v.real, w, float(np.real(lam)), basis=H.basis))
        vals, vecs = spla.eigs(H.matrix, k=min(6, H.dim - 2), sigma=ref.E0)
    order = np.argsort(vals.real)
    E = vals[order[0]]
    realgap = float(vals[order[1]].real - E.real)
    if not realgap > gap_floor:
        raise SelectionAmbiguityError(f"real-part gap {realgap:.3e} below floor; selection ambiguous")
    psiR = vecs[:, order[0]]
    binorm = psiR @ psiR
    if abs(binorm) < BINORM_FLOOR * np.vdot(psiR, psiR).real:
        raise SelectionAmbiguityError("left/right overlap nearly vanishes (close to an exceptional point)")
    psiR = psiR / np.sqrt(binorm)
    k = np.argmax(np.abs(psiR))
    if psiR[k].real < 0:
        psiR = -psiR
    psiL = psiR.conj()
    return ComplexEigenSolution(H, complex(E), psiR, psiL, realgap, vals[order[1:]])


def complex_density(sol: ComplexEigenSolution) -> np.ndarray:
    """Density of the projector ``psiR psiL^H``; integrates to ``N``."""
    return mixed_density(sol.basis, sol.psiR, sol.psiL)


def complex_response(sol: ComplexEigenSolution, u) -> np.ndarray:
    """Holomorphic derivative of the density along a potential increment.

    Right and left eigenvectors move by their reduced resolvents, giving
    the two-term formula ``B_{psiL}(R u psiR) + conj-partner(left term)``.
    """
    basis = sol.basis
    r = u.load() if isinstance(u, PotentialField) else np.asarray(u)
    ur = basis.sum_over_particles(r)
    dR = sol.resolvent(ur * sol.psiR)
    dL = sol.resolvent(np.conj(ur) * sol.psiL, left=True)
    return mixed_density(basis, dR, sol.psiL) + mixed_density(basis, sol.psiR, dL)


def eigenvalue_property_residual(sol: ComplexEigenSolution) -> dict:
    """``||[H - (F_C + <rho, v>)] psiR||`` under both pairing conventions.

    ``bilinear`` pairs ``sum_i h rho_i v_i``; ``sesquilinear`` conjugates
    the density first.  Only the bilinear form reproduces the eigenvalue.
    """
    H = sol.hamiltonian
    rho = complex_density(sol)
    F = sol.F()
    load = H.potential.load()
    out = {}
    for name, pairing in (("bilinear", rho @ load), ("sesquilinear", np.conj(rho) @ load)):
        lam_eff = F + pairing / H.grid.n
        res = H.matrix @ sol.psiR - lam_eff * sol.psiR
        out[name] = float(np.linalg.norm(res))
    out["E"] = sol.E
    out["F"] = F
    return out


@dataclass
class ComplexInversionResult:
    v: ComplexPotential
    iterations: int
    residual_history: list
    final_density: np.ndarray
    solution: ComplexEigenSolution = field(repr=False)

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


def _complex_gauge(v: ComplexPotential) -> ComplexPotential:
    return v.replace_smooth(v.smooth - v.total_mass())


def complex_invert(
    grid: Grid,
    N: int,
    rho_target,
    w: InteractionSpec | None = None,
    lam: complex = 0.0,
    v0: PotentialField | None = None,
    tol: float = 1e-10,
    max_iter: int = 40,
    max_halvings: int = 20,
    max_imag: float = MAX_IMAG,
) -> ComplexInversionResult:
    """Complex potential (modulo complex constants) producing ``rho_target``.

    Newton on the complex cosine coordinates with the Jacobian of
    :func:`complex_response`.  Without ``v0`` the start is the real
    inversion of ``Re rho_target`` at ``Re lam``.
    """
    rho_target = np.asarray(rho_target, dtype=complex)
    mass = grid.h * rho_target.sum()
    if abs(mass - N) > 1e-8 * N:
        raise ConfigurationError(f"complex density integrates to {mass}, expected {N}")
    if v0 is None:
        check_density(grid, rho_target.real, N)
        v0 = invert_density(grid, N, rho_target.real, w, float(np.real(lam)), tol=min(tol, 1e-9)).v
    v = _complex_gauge(as_complex(v0))
    basis = TupleBasis(grid.n, N)
    Q = cosine_basis(grid)
    sol = complex_ground(grid, N, v, w, lam, max_imag=max_imag, basis=basis)
    rho = complex_density(sol)
    r = h1_norm(rho - rho_target, grid)
    history = [r]
    it = 0
    while r > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"complex Newton did not converge in {max_iter} iterations", history)
        J = grid.h * Q.T @ np.stack([complex_response(sol, Q[:, l]) for l in range(Q.shape[1])], axis=1)
        cond = np.linalg.cond(J)
        if cond > 1e12:
            raise SolverError(f"complex Jacobian ill-conditioned (cond {cond:.3e})")
        a = np.linalg.solve(J, grid.h * Q.T @ (rho - rho_target))
        step = ComplexPotential(Q @ a)
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = _complex_gauge(v - step * t)
            try:
                tsol = complex_ground(grid, N, trial, w, lam, max_imag=max_imag, basis=basis)
                trho = complex_density(tsol)
                tr = h1_norm(trho - rho_target, grid)
            except SolverError:
                tr = np.inf
            if tr < r:
                break
            t *= 0.5
        else:
            raise NonConvergenceError(f"complex Newton stagnated at {r:.3e}", history)
        v, sol, rho, r = trial, tsol, trho, tr
        it += 1
        history.append(r)
    return ComplexInversionResult(v, it, history, rho, sol)


@dataclass
class HolomorphyReport:
    eps: list
    residuals: list
    orders: list
    quantity: str
    scheme: str = "forward"

    @property
    def min_order(self) -> float:
        return float(min(self.orders))

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "scheme": self.scheme,
            "eps": self.eps,
            "residuals": self.residuals,
            "orders": self.orders,
        }


def holomorphy_check(
    grid: Grid,
    N: int,
    v: PotentialField,
    w: InteractionSpec | None,
    lam: complex,
    direction: PotentialField | None = None,
    dlam: complex = 0.0,
    eps=(1e-3, 5e-4, 2.5e-4),
    quantity: str = "density",
    scheme: str = "forward",
) -> HolomorphyReport:
    """Finite-difference Cauchy-Riemann test along ``(direction, dlam)``.

    With ``D_z = (f(b + z e) - f(b)) / |z|`` the residual
    ``||D_eps - (-i) D_{i eps}||`` is ``O(eps)`` for holomorphic ``f``.
    ``quantity`` is ``"density"``, ``"F"`` (the holomorphic functional
    ``<psiL, H(0, lam w) psiR>``) or ``"conj_density"`` (anti-holomorphic
    negative control).  ``scheme="central"`` uses
    ``D_z = (f(b + z e) - f(b - z e)) / (2 |z|)``, for which the residual
    is ``O(eps^2)``; the anti-holomorphic control stays ``O(1)`` either way.
    """
    if scheme not in ("forward", "central"):
        raise ConfigurationError(f"unknown difference scheme {scheme!r}")
    v = as_complex(v)
    direction = ComplexPotential(np.zeros(grid.n)) if direction is None else as_complex(direction)
    basis = TupleBasis(grid.n, N)

    def f(z):
        sol = complex_ground(grid, N, v + direction * z, w, lam + dlam * z, basis=basis, max_imag=np.inf)
        if quantity == "density":
            return complex_density(sol)
        if quantity == "conj_density":
            return np.conj(complex_density(sol))
        if quantity == "F":
            return np.array([sol.F()])
        raise ConfigurationError(f"unknown quantity {quantity!r}")

    _ball_check(grid, v, lam, MAX_IMAG)
    base = f(0.0)
    norm = (lambda x: h1_norm(x, grid)) if quantity != "F" else (lambda x: float(np.abs(x[0])))
    residuals = []
    for e in eps:
        if scheme == "forward":
            De = (f(e) - base) / e
            Die = (f(1j * e) - base) / e
        else:
            De = (f(e) - f(-e)) / (2 * e)
            Die = (f(1j * e) - f(-1j * e)) / (2 * e)
        residuals.append(norm(De + 1j * Die))
    orders = [
        float(np.log(residuals[i] / residuals[i + 1]) / np.log(eps[i] / eps[i + 1])) for i in range(len(eps) - 1)
    ]
    return HolomorphyReport([float(e) for e in eps], residuals, orders, quantity, scheme)
