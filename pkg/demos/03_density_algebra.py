"""Densities, pair densities and the Gram identity for ``I + K``.

Run with ``python3 demos/03_density_algebra.py``.
"""

import numpy as np

from ksdft1d import (
    Grid,
    InteractionSpec,
    PotentialField,
    assemble_hamiltonian,
    check_IplusK_invertible,
    dens,
    ground_state,
    pair_density,
)

g = Grid(24)
w = InteractionSpec.soft_coulomb(1.0, 0.1)
H = assemble_hamiltonian(g, 2, PotentialField(5 * np.cos(2 * np.pi * g.nodes)), w, 1.0)
sol = ground_state(H)
rho = dens(sol.basis, sol.psi0)
rho2 = pair_density(sol.basis, sol.psi0)
print(f"int rho = {g.h * rho.sum():.12f}")
print(f"int int rho2 = {g.h**2 * rho2.sum():.12f}  (N(N-1) = 2)")
print(f"marginal error |int rho2 dy - (N-1) rho| = {np.abs(g.h * rho2.sum(1) - rho).max():.1e}")

# B B^*(f / rho) assembled through the state agrees with (I + K) f.
rep = check_IplusK_invertible(sol.basis, sol.psi0, H)
for key, value in rep.to_dict().items():
    print(f"{key:24s} {value}")
