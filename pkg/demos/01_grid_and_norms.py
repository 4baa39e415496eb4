"""Cell-centred Neumann grid, Sobolev norms and the potential quotient.

Run with ``python3 demos/01_grid_and_norms.py``.
"""

import numpy as np

from ksdft1d import (
    Grid,
    PotentialField,
    gauge_fix,
    h1_inner,
    hneg1_norm,
    neumann_eigenvalues,
    neumann_laplacian,
    quotient_norm,
)

# The stencil's cosine modes are exact eigenvectors, and the closed-form
# eigenvalues approach (k pi)^2 at second order.
for n in (16, 32, 64):
    g = Grid(n)
    f = np.cos(np.pi * g.nodes)
    lam = neumann_eigenvalues(g, 1)
    print(f"n={n:3d}  |Lf - lam f| = {np.abs(neumann_laplacian(g) @ f - lam * f).max():.1e}  "
          f"lam_1 - pi^2 = {lam - np.pi**2:+.3e}")

g = Grid(64)
f = np.cos(np.pi * g.nodes)
print(f"\n||cos(pi x)||_H1^2 = {h1_inner(f, f, g):.6f}  (continuum {0.5 + np.pi**2 / 2:.6f})")

# Potentials are distributions: a smooth part plus point atoms.  The
# quotient norm forgets additive constants.
v = PotentialField(3 * g.nodes**2, atoms=((g.nearest_node(0.5), 1.0),))
print(f"||v||_H-1 = {hneg1_norm(v, g):.6f}")
print(f"||[v]||   = {quotient_norm(v, g):.6f}")
print(f"||[v + 7]|| = {quotient_norm(v + 7.0, g):.6f}")
print(f"total mass after gauge fix: {gauge_fix(v).total_mass():.1e}")
