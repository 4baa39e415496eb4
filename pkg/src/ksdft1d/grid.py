"""Cell-centred grid on (0, 1), Neumann Laplacian and Sobolev norms.

All fields are plain numpy arrays of node samples.  Potentials are
distributions: grid samples of a regular part plus a finite number of
weighted point atoms.  The dual pairing of a field ``f`` with a potential
``v`` is

    <f, v> = sum_i h * smooth_i * f_i + sum_a weight_a * f[idx_a],

which equals ``h * f @ v.load()`` with the load vector
``load_i = smooth_i + sum_{a: idx_a = i} weight_a / h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .errors import ConfigurationError

__all__ = [
    "Grid",
    "PotentialField",
    "make_grid",
    "neumann_laplacian",
    "h1_inner",
    "h1_norm",
    "hneg1_norm",
    "quotient_norm",
    "gauge_fix",
    "integrate",
    "cosine_basis",
    "neumann_eigenvalues",
]

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred mesh with ``n`` cells of width ``1/n``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_CELLS:
            raise ConfigurationError(f"grid needs an integer n >= {MIN_CELLS}, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        x = (np.arange(self.n) + 0.5) / self.n
        x.setflags(write=False)
        return x

    def nearest_node(self, x: float) -> int:
        """Index of the cell containing ``x`` (atoms snap to it)."""
        if not 0.0 <= x <= 1.0:
            raise ConfigurationError(f"position {x} outside [0, 1]")
        return min(int(np.floor(x * self.n)), self.n - 1)


def make_grid(n: int) -> Grid:
    return Grid(n)


def integrate(grid: Grid, f) -> complex | float:
    """Midpoint quadrature of node samples."""
    return grid.h * np.sum(f)


@dataclass(frozen=True)
class PotentialField:
    """Real distributional potential: smooth samples plus point atoms.

    Parameters
    ----------
    smooth : array_like, shape (n,)
        Samples of the regular part at the nodes.
    atoms : sequence of (int, float)
        Point masses as ``(node index, weight)``; weights carry units of
        energy times length.
    """

    smooth: np.ndarray
    atoms: tuple = field(default=())

    _dtype = float

    def __post_init__(self):
        smooth = np.array(self.smooth, dtype=self._dtype_for(self.smooth))
        if smooth.ndim != 1:
            raise ConfigurationError("potential samples must be one-dimensional")
        if not np.all(np.isfinite(smooth)):
            raise ConfigurationError("potential samples must be finite")
        atoms = []
        for idx, weight in self.atoms:
            if int(idx) != idx or not 0 <= idx < smooth.size:
                raise ConfigurationError(f"atom index {idx!r} outside the grid")
            weight = self._scalar(weight)
            if not np.isfinite(weight):
                raise ConfigurationError("atom weights must be finite")
            atoms.append((int(idx), weight))
        smooth.setflags(write=False)
        object.__setattr__(self, "smooth", smooth)
        object.__setattr__(self, "atoms", tuple(atoms))

    def _dtype_for(self, values):
        if np.iscomplexobj(values):
            raise ConfigurationError("real potential received complex samples")
        return float

    def _scalar(self, value):
        if np.iscomplexobj(value):
            raise ConfigurationError("real potential received a complex atom weight")
        return float(value)

    @classmethod
    def zeros(cls, grid: Grid) -> "PotentialField":
        return cls(np.zeros(grid.n))

    @classmethod
    def from_function(cls, grid: Grid, func, atoms=()) -> "PotentialField":
        return cls(np.asarray(func(grid.nodes)), atoms)

    @property
    def n(self) -> int:
        return self.smooth.size

    def load(self) -> np.ndarray:
        """Load vector: smooth part plus atoms spread over their cell."""
        r = np.array(self.smooth, dtype=self.smooth.dtype)
        h = 1.0 / self.n
        for idx, weight in self.atoms:
            r[idx] += weight / h
        return r

    def total_mass(self):
        """``<1, v>``: integral of the smooth part plus atom weights."""
        return self.smooth.sum() / self.n + sum(w for _, w in self.atoms)

    def pair(self, f) -> float:
        """Dual pairing ``<f, v>`` with a field of node samples."""
        f = np.asarray(f)
        return (f @ self.load()) / self.n

    def _build(self, smooth, atoms=None) -> "PotentialField":
        """New potential of the same kind, promoted to complex if needed."""
        atoms = self.atoms if atoms is None else atoms
        if isinstance(self, PotentialField) and type(self)._dtype is complex:
            return type(self)(smooth, atoms)
        if np.iscomplexobj(smooth) or any(np.iscomplexobj(w) for _, w in atoms):
            from .complex_ext import ComplexPotential

            return ComplexPotential(smooth, atoms)
        return type(self)(smooth, atoms)

    def replace_smooth(self, smooth) -> "PotentialField":
        return self._build(np.asarray(smooth))

    def _combine(self, other, sign):
        if isinstance(other, PotentialField):
            if other.n != self.n:
                raise ConfigurationError("potentials live on different grids")
            merged = {}
            for idx, w in self.atoms:
                merged[idx] = merged.get(idx, 0) + w
            for idx, w in other.atoms:
                merged[idx] = merged.get(idx, 0) + sign * w
            base = other if type(other)._dtype is complex else self
            return base._build(self.smooth + sign * other.smooth, tuple(sorted(merged.items())))
        return self._build(self.smooth + sign * other)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self * -1

    def __mul__(self, c):
        return self._build(self.smooth * c, tuple((i, w * c) for i, w in self.atoms))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "smooth": [float(x) for x in self.smooth],
            "atoms": [[idx, float(w)] for idx, w in self.atoms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialField":
        smooth = data["smooth"]
        if "n" in data and len(smooth) != data["n"]:
            raise ConfigurationError("potential 'n' does not match number of samples")
        return cls(smooth, tuple((int(i), w) for i, w in data.get("atoms", [])))


def neumann_laplacian(grid: Grid) -> sp.csr_matrix:
    """Matrix of ``-Delta`` with mirror ghost cells (row sums vanish)."""
    n, h2 = grid.n, grid.h**2
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    off = -np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h2


def neumann_eigenvalues(grid: Grid, k) -> np.ndarray:
    """Closed-form spectrum ``(2/h^2)(1 - cos(k pi h))`` of the stencil."""
    k = np.asarray(k, dtype=float)
    return 2.0 / grid.h**2 * (1.0 - np.cos(k * np.pi * grid.h))


def cosine_basis(grid: Grid) -> np.ndarray:
    """Columns ``sqrt(2) cos(k pi x)``, ``k = 1..n-1``.

    Orthonormal for the quadrature inner product ``h * f @ g`` and exactly
    mean-free at the cell centres; they are the eigenvectors of the
    discrete Neumann Laplacian orthogonal to the constants.
    """
    k = np.arange(1, grid.n)
    return np.sqrt(2.0) * np.cos(np.pi * np.outer(grid.nodes, k))


def _check_field(grid: Grid, *fields):
    for f in fields:
        if np.shape(f) != (grid.n,):
            raise ConfigurationError(f"field of shape {np.shape(f)} does not match grid n={grid.n}")


def h1_inner(f, g, grid: Grid):
    """Discrete H^1 inner product (bilinear; no conjugation)."""
    _check_field(grid, f, g)
    f = np.asarray(f)
    g = np.asarray(g)
    h = grid.h
    return h * np.sum(f * g) + np.sum(np.diff(f) * np.diff(g)) / h


def h1_norm(f, grid: Grid) -> float:
    """H^1 norm; complex fields use ``|Re|^2 + |Im|^2``."""
    f = np.asarray(f)
    if np.iscomplexobj(f):
        return float(np.sqrt(h1_inner(f.real, f.real, grid) + h1_inner(f.imag, f.imag, grid)))
    return float(np.sqrt(h1_inner(f, f, grid)))


def _solve_shifted(grid: Grid, rhs) -> np.ndarray:
    """Solve ``(1 - Delta_h) u = rhs`` for the mirror-ghost stencil."""
    n, h2 = grid.n, grid.h**2
    ab = np.empty((3, n))
    ab[0, :] = -1.0 / h2
    ab[2, :] = -1.0 / h2
    ab[1, :] = 1.0 + 2.0 / h2
    ab[1, 0] = ab[1, -1] = 1.0 + 1.0 / h2
    return solve_banded((1, 1), ab, rhs)


def _dual_norm_of_load(grid: Grid, r) -> float:
    r = np.asarray(r)
    if np.iscomplexobj(r):
        return float(np.hypot(_dual_norm_of_load(grid, r.real), _dual_norm_of_load(grid, r.imag)))
    u = _solve_shifted(grid, r)
    return float(np.sqrt(max(grid.h * (u @ r), 0.0)))


def hneg1_norm(v: PotentialField, grid: Grid) -> float:
    """Dual norm of ``v`` with respect to :func:`h1_inner`."""
    _check_field(grid, v.smooth)
    return _dual_norm_of_load(grid, v.load())


def quotient_norm(v: PotentialField, grid: Grid) -> float:
    """Norm of the class of ``v`` modulo additive constants.

    The optimal constant is the total mass because ``(1 - Delta_h)``
    fixes constants.
    """
    _check_field(grid, v.smooth)
    return _dual_norm_of_load(grid, v.load() - v.total_mass())


def gauge_fix(v: PotentialField) -> PotentialField:
    """Canonical representative of ``[v]`` with zero total mass."""
    return v.replace_smooth(v.smooth - v.total_mass())
