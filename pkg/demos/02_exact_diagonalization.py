"""Exact diagonalization of a few spinless fermions on the grid.

Run with ``python3 demos/02_exact_diagonalization.py``.
"""

import time

import numpy as np

from ksdft1d import Grid, InteractionSpec, PotentialField, assemble_hamiltonian, ground_state, neumann_eigenvalues

# Free fermions fill the lowest Neumann modes.
g = Grid(32)
sol = ground_state(assemble_hamiltonian(g, 2, PotentialField.zeros(g), None, 0.0))
print(f"free pair: E0 = {sol.E0:.10f}, lowest-mode sum = {neumann_eigenvalues(g, 1):.10f}")

# Interacting pair and triple in a cosine well; above the dense limit the
# solver switches to thick-restart Lanczos.
w = InteractionSpec.soft_coulomb(1.0, 0.1)
for n, N in ((32, 2), (100, 2), (24, 3)):
    g = Grid(n)
    H = assemble_hamiltonian(g, N, PotentialField(10 * np.cos(2 * np.pi * g.nodes)), w, 1.0)
    t = time.perf_counter()
    sol = ground_state(H)
    print(f"n={n:3d} N={N} dim={H.dim:5d} [{sol.method:7s}] E0={sol.E0:.8f} gap={sol.gap:.6f} "
          f"residual={sol.residual():.1e} ({time.perf_counter() - t:.2f}s)")
