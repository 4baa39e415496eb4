"""N-fermion Hamiltonian on the antisymmetric grid basis.

Basis states are strictly increasing index tuples ``K = (i_1 < ... < i_N)``,
each standing for the normalised Slater determinant of cell indicator
functions.  In one dimension a nearest-neighbour hop never changes the
ordering of a tuple, so the kinetic term carries no fermionic signs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConfigurationError,
    DegenerateGroundStateError,
    NonConvergenceError,
    SolverError,
)
from .grid import Grid, PotentialField

logger = logging.getLogger(__name__)

__all__ = [
    "InteractionSpec",
    "TupleBasis",
    "Hamiltonian",
    "SpectralSolution",
    "assemble_hamiltonian",
    "ground_state",
    "spectrum",
    "reduced_resolvent_apply",
    "lanczos_lowest",
    "DENSE_LIMIT",
    "MAX_DIM",
    "MAX_PARTICLES",
    "GAP_FLOOR",
]

MAX_PARTICLES = 4
DENSE_LIMIT = 4000
MAX_DIM = 200_000
GAP_FLOOR = 1e-8

_KINDS = ("soft_coulomb", "yukawa", "contact", "custom", "none")


@dataclass(frozen=True)
class InteractionSpec:
    """Pair interaction ``w(x, y)``.

    ``soft_coulomb``: ``c / sqrt((x-y)^2 + a^2)``; ``yukawa``:
    ``c exp(-kappa |x-y|)``; ``contact``: ``c delta(x-y)``; ``custom``: an
    explicit symmetric ``n x n`` matrix of kernel samples; ``none``: no
    interaction.
    """

    kind: str = "none"
    strength: float = 0.0
    softening: float = 1.0
    screening: float = 1.0
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown interaction kind {self.kind!r}")
        if self.kind == "soft_coulomb" and not self.softening > 0:
            raise ConfigurationError("soft-Coulomb softening must be positive")
        if self.kind == "yukawa" and not self.screening >= 0:
            raise ConfigurationError("Yukawa screening must be non-negative")
        if self.kind == "custom":
            if self.matrix is None:
                raise ConfigurationError("custom interaction needs a kernel matrix")
            m = np.array(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ConfigurationError("custom kernel must be a square matrix")
            if np.max(np.abs(m - m.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(m), initial=0.0)):
                raise ConfigurationError("custom kernel must be symmetric")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @classmethod
    def soft_coulomb(cls, strength=1.0, softening=0.1):
        return cls("soft_coulomb", strength=strength, softening=softening)

    @classmethod
    def yukawa(cls, strength=1.0, screening=1.0):
        return cls("yukawa", strength=strength, screening=screening)

    @classmethod
    def contact(cls, strength=1.0):
        return cls("contact", strength=strength)

    @classmethod
    def custom(cls, matrix):
        return cls("custom", matrix=matrix)

    @classmethod
    def none(cls):
        return cls("none")

    def kernel_matrix(self, grid: Grid) -> np.ndarray:
        """Samples ``w(x_i, x_j)``; the contact delta becomes ``(c/h) I``."""
        x = grid.nodes
        d = np.abs(x[:, None] - x[None, :])
        if self.kind == "soft_coulomb":
            return self.strength / np.sqrt(d**2 + self.softening**2)
        if self.kind == "yukawa":
            return self.strength * np.exp(-self.screening * d)
        if self.kind == "contact":
            return self.strength / grid.h * np.eye(grid.n)
        if self.kind == "custom":
            if self.matrix.shape != (grid.n, grid.n):
                raise ConfigurationError("custom kernel does not match the grid")
            return np.array(self.matrix)
        return np.zeros((grid.n, grid.n))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("soft_coulomb", "yukawa", "contact"):
            out["strength"] = float(self.strength)
        if self.kind == "soft_coulomb":
            out["softening"] = float(self.softening)
        if self.kind == "yukawa":
            out["screening"] = float(self.screening)
        if self.kind == "custom":
            out["matrix"] = self.matrix.tolist()
        return out


class TupleBasis:
    """Lexicographically ordered strictly increasing ``N``-tuples of nodes."""

    def __init__(self, n: int, N: int):
        if not 1 <= N <= MAX_PARTICLES:
            raise ConfigurationError(f"particle count must be in 1..{MAX_PARTICLES}, got {N}")
        if N > n:
            raise ConfigurationError("more particles than grid cells")
        dim = comb(n, N)
        if dim > MAX_DIM:
            raise ConfigurationError(f"basis dimension {dim} exceeds the cap {MAX_DIM}")
        self.n = n
        self.N = N
        self.dim = dim
        self.tuples = np.array(list(combinations(range(n), N)), dtype=np.int64).reshape(dim, N)
        self.tuples.setflags(write=False)
        self._keys = self.encode(self.tuples)

    def encode(self, tuples) -> np.ndarray:
        weights = self.n ** np.arange(self.N - 1, -1, -1, dtype=np.int64)
        return np.asarray(tuples) @ weights

    def index(self, tuples) -> np.ndarray:
        """Positions of sorted tuples in the basis."""
        return np.searchsorted(self._keys, self.encode(tuples))

    def sum_over_particles(self, f) -> np.ndarray:
        """``sum_j f(x_{i_j})`` for every basis tuple."""
        return np.asarray(f)[self.tuples].sum(axis=1)

    def pair_sum(self, W) -> np.ndarray:
        """``sum_{j != k} W[i_j, i_k]`` (ordered pairs) for every tuple."""
        out = np.zeros(self.dim, dtype=np.result_type(W, float))
        for a, b in combinations(range(self.N), 2):
            out += 2.0 * W[self.tuples[:, a], self.tuples[:, b]]
        return out

    def __repr__(self):
        return f"TupleBasis(n={self.n}, N={self.N}, dim={self.dim})"


def _kinetic_matrix(basis: TupleBasis, h: float) -> sp.csr_matrix:
    n, N, t = basis.n, basis.N, basis.tuples
    diag = np.zeros(basis.dim)
    for j in range(N):
        diag += 2.0 - (t[:, j] == 0) - (t[:, j] == n - 1)
    rows, cols = [], []
    for j in range(N):
        for d in (-1, 1):
            target = t[:, j] + d
            ok = (target >= 0) & (target < n)
            nb = j + d
            if 0 <= nb < N:
                ok &= t[:, nb] != target
            src = np.nonzero(ok)[0]
            moved = t[src].copy()
            moved[:, j] += d
            rows.append(src)
            cols.append(basis.index(moved))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    off = sp.csr_matrix((-np.ones(rows.size), (rows, cols)), shape=(basis.dim, basis.dim))
    return (sp.diags(diag) + off).tocsr() / h**2


@dataclass(eq=False)
class Hamiltonian:
    """Assembled ``H_N(v, lam w)``; immutable after construction."""

    grid: Grid
    basis: TupleBasis
    potential: PotentialField
    interaction: InteractionSpec
    lam: complex | float
    kinetic: sp.csr_matrix
    potential_diag: np.ndarray
    interaction_diag: np.ndarray

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        diag = self.potential_diag + self.lam * self.interaction_diag
        return (self.kinetic + sp.diags(diag)).tocsr()

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix.data) or not np.any(self.matrix.data.imag)

    def matvec(self, x) -> np.ndarray:
        return self.matrix @ x

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def kinetic_energy(self, psi) -> float:
        return np.vdot(psi, self.kinetic @ psi)

    def interaction_energy(self, psi) -> float:
        """``<Psi, w_hat Psi>`` without the coupling constant."""
        return np.vdot(psi, self.interaction_diag * psi)

    def with_parameters(self, potential=None, lam=None) -> "Hamiltonian":
        """Same grid, basis and kernel; new potential and/or coupling."""
        return assemble_hamiltonian(
            self.grid,
            self.N,
            self.potential if potential is None else potential,
            self.interaction,
            self.lam if lam is None else lam,
            basis=self.basis,
            _kinetic=self.kinetic,
            _interaction_diag=self.interaction_diag,
        )


def assemble_hamiltonian(
    grid: Grid,
    N: int,
    v: PotentialField | None = None,
    w: InteractionSpec | None = None,
    lam=0.0,
    *,
    basis: TupleBasis | None = None,
    _kinetic=None,
    _interaction_diag=None,
) -> Hamiltonian:
    """Build ``-Delta + lam sum_{j != k} w(x_j, x_k) + sum_j v(x_j)``.

    For spinless fermions the contact interaction is exactly zero because
    two particles never share a cell; it is accepted for completeness.
    """
    v = PotentialField.zeros(grid) if v is None else v
    w = InteractionSpec.none() if w is None else w
    if v.n != grid.n:
        raise ConfigurationError("potential does not match the grid")
    basis = TupleBasis(grid.n, N) if basis is None else basis
    kinetic = _kinetic_matrix(basis, grid.h) if _kinetic is None else _kinetic
    if _interaction_diag is None:
        _interaction_diag = basis.pair_sum(w.kernel_matrix(grid)) if N >= 2 else np.zeros(basis.dim)
    return Hamiltonian(
        grid=grid,
        basis=basis,
        potential=v,
        interaction=w,
        lam=lam,
        kinetic=kinetic,
        potential_diag=basis.sum_over_particles(v.load()),
        interaction_diag=_interaction_diag,
    )


@dataclass(eq=False)
class SpectralSolution:
    """Ground state, gap and the lowest computed eigenpairs of a Hamiltonian."""

    hamiltonian: Hamiltonian
    energies: np.ndarray
    states: np.ndarray
    method: str = "dense"

    @property
    def E0(self) -> float:
        return float(self.energies[0])

    @property
    def gap(self) -> float:
        return float(self.energies[1] - self.energies[0])

    @property
    def psi0(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def basis(self) -> TupleBasis:
        return self.hamiltonian.basis

    @property
    def grid(self) -> Grid:
        return self.hamiltonian.grid

    def residual(self, j=0) -> float:
        psi = self.states[:, j]
        return float(np.linalg.norm(self.hamiltonian.matvec(psi) - self.energies[j] * psi))

    @cached_property
    def _deflated_factor(self):
        H = self.hamiltonian
        shift = self.gap
        if H.dim <= DENSE_LIMIT:
            A = H.dense() - self.E0 * np.eye(H.dim) + shift * np.outer(self.psi0, self.psi0)
            return ("dense", sla.cho_factor(A, lower=True))
        return ("iterative", shift)

    def to_summary(self) -> dict:
        psi = self.psi0
        return {
            "E0": float(self.E0),
            "gap": float(self.gap),
            "norm": float(np.linalg.norm(psi)),
            "residual": self.residual(0),
            "dim": int(self.hamiltonian.dim),
            "n": int(self.grid.n),
            "N": int(self.hamiltonian.N),
            "method": self.method,
            "energies": [float(e) for e in self.energies],
        }


def _fix_phase(states: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(states), axis=0)
    signs = np.sign(states[idx, np.arange(states.shape[1])])
    signs[signs == 0] = 1.0
    return states * signs


def lanczos_lowest(
    matvec,
    dim: int,
    k: int = 2,
    v0=None,
    tol: float = 1e-10,
    max_krylov: int = 200,
    max_restarts: int = 100,
    rng=None,
):
    """Lowest ``k`` eigenpairs of a real symmetric operator.

    Thick-restart Lanczos with full reorthogonalisation: each cycle keeps
    the lowest Ritz vectors plus the residual direction, so the projected
    matrix is an arrowhead followed by the usual tridiagonal block.
    Convergence requires ``||A y - theta y|| <= tol (1 + |theta|)`` for
    every wanted pair (floored at a few ulps of the spectral spread).

    Returns
    -------
    values : ndarray, shape (k,)
    vectors : ndarray, shape (dim, k)
    """
    rng = np.random.default_rng(0) if rng is None else rng
    m = min(max_krylov, dim)
    if k >= m:
        raise ConfigurationError(f"Krylov space of size {m} cannot resolve {k} eigenpairs")
    keep = min(k + max(k, 10), m - 1)
    V = np.zeros((dim, m + 1))
    T = np.zeros((m, m))
    start = rng.standard_normal(dim) if v0 is None else np.asarray(v0, dtype=float).reshape(dim, -1).sum(axis=1)
    V[:, 0] = start / np.linalg.norm(start)
    j0 = 0
    for restart in range(max_restarts):
        steps = m
        for j in range(j0, m):
            w = matvec(V[:, j])
            T[j, j] = V[:, j] @ w
            w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
            w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
            beta = np.linalg.norm(w)
            if beta < 1e-13 * max(1.0, abs(T[j, j])):
                steps = j + 1
                break
            V[:, j + 1] = w / beta
            if j + 1 < m:
                T[j, j + 1] = T[j + 1, j] = beta
        theta, S = np.linalg.eigh(T[:steps, :steps])
        kk = min(k, steps)
        scale = np.max(np.abs(theta))
        # residual norms from the last row of the eigenvector matrix
        resid = np.abs(beta * S[steps - 1, :kk]) if steps == m else np.zeros(kk)
        logger.debug("lanczos cycle %d: residual estimates %s", restart, resid)
        bound = np.maximum(tol * (1.0 + np.abs(theta[:kk])), 1e3 * np.finfo(float).eps * scale)
        if kk == k and np.all(resid <= bound):
            Y = V[:, :steps] @ S[:, :k]
            true = np.linalg.norm(np.column_stack([matvec(Y[:, i]) for i in range(k)]) - Y * theta[:k], axis=0)
            if np.all(true <= 10 * bound):
                return theta[:k], Y
        if steps < m:
            raise NonConvergenceError("Lanczos broke down before resolving the wanted pairs")
        # thick restart: Ritz vectors, then the residual direction
        p = keep
        Y = V[:, :steps] @ S[:, :p]
        V[:, :p] = Y
        V[:, p] = V[:, m]
        V[:, p + 1 :] = 0.0
        T[:] = 0.0
        T[np.arange(p), np.arange(p)] = theta[:p]
        T[p, :p] = T[:p, p] = beta * S[steps - 1, :p]
        j0 = p
    raise NonConvergenceError(f"Lanczos did not converge after {max_restarts} restarts")


def spectrum(hamiltonian: Hamiltonian, k: int, tol: float = 1e-10):
    """Lowest ``k`` eigenvalues (ascending) and orthonormal eigenvectors."""
    H = hamiltonian
    if not H.is_real:
        raise ConfigurationError("spectrum() needs a real symmetric Hamiltonian; use complex_ext")
    if not 1 <= k <= H.dim:
        raise ConfigurationError(f"requested {k} eigenpairs from a space of dimension {H.dim}")
    if H.dim <= DENSE_LIMIT:
        A = H.matrix.real.toarray()
        values, vectors = sla.eigh(A, subset_by_index=[0, k - 1])
        method = "dense"
    else:
        values, vectors = lanczos_lowest(lambda x: H.matrix.real @ x, H.dim, k=k, tol=tol * 0.1)
        # Rayleigh-Ritz polish on the converged subspace
        Q, _ = np.linalg.qr(vectors)
        T = Q.T @ (H.matrix.real @ Q)
        values, S = np.linalg.eigh(T)
        vectors = Q @ S
        method = "lanczos"
    return values, _fix_phase(vectors), method


def ground_state(
    hamiltonian: Hamiltonian, n_excited: int = 1, gap_floor: float = GAP_FLOOR
) -> SpectralSolution:
    """Lowest eigenpair plus gap; degeneracy below ``gap_floor`` raises.

    ``n_excited`` excited pairs are kept (at least one, for the gap).
    """
    k = min(max(1, n_excited) + 1, hamiltonian.dim)
    if k < 2:
        raise ConfigurationError("a one-dimensional space has no spectral gap")
    values, vectors, method = spectrum(hamiltonian, k)
    sol = SpectralSolution(hamiltonian, values, vectors, method)
    if not sol.gap > gap_floor:
        raise DegenerateGroundStateError(
            f"degenerate ground state: gap {sol.gap:.3e} below floor {gap_floor:.1e}"
        )
    res = sol.residual(0)
    if res > 1e-9 * (1.0 + abs(sol.E0)):
        raise SolverError(f"ground-state residual {res:.3e} exceeds tolerance")
    return sol


def reduced_resolvent_apply(sol: SpectralSolution, F, tol: float = 1e-13) -> np.ndarray:
    """Apply ``R_perp = (E0 - H)^{-1} P_perp`` to one load or a block of loads.

    Solves the deflated system ``(H - E0 + gap |Psi0><Psi0|) y = P_perp F``,
    which is positive definite, and returns ``x = -y``; ``x`` is
    orthogonal to the ground state.
    """
    F = np.asarray(F)
    if np.iscomplexobj(F):
        return reduced_resolvent_apply(sol, F.real, tol) + 1j * reduced_resolvent_apply(sol, F.imag, tol)
    psi = sol.psi0
    PF = F - np.outer(psi, psi @ F).reshape(F.shape) if F.ndim == 2 else F - psi * (psi @ F)
    kind, factor = sol._deflated_factor
    if kind == "dense":
        y = sla.cho_solve(factor, PF)
    else:
        H = sol.hamiltonian.matrix.real
        E0, shift = sol.E0, factor

        def op(x):
            return H @ x - E0 * x + shift * psi * (psi @ x)

        A = spla.LinearOperator(H.shape, matvec=op, dtype=float)
        cols = PF.reshape(PF.shape[0], -1)
        ys = []
        for c in cols.T:
            yc, info = spla.cg(A, c, rtol=tol, atol=0.0, maxiter=20 * H.shape[0])
            if info != 0:
                raise SolverError(f"deflated CG failed (info={info})")
            ys.append(yc)
        y = np.stack(ys, axis=1).reshape(PF.shape)
    # remove round-off drift back into the ground-state direction
    y = y - np.outer(psi, psi @ y).reshape(y.shape) if y.ndim == 2 else y - psi * (psi @ y)
    return -y
