"""Linear response of the density and its finite-difference validation.

Run with ``python3 demos/04_linear_response.py``.
"""

import numpy as np

from ksdft1d import Grid, InteractionSpec, PotentialField, assemble_hamiltonian, assemble_lro, dens, ground_state, h1_norm, lro_apply
from ksdft1d.response import projector_derivative_check

g = Grid(24)
H = assemble_hamiltonian(g, 2, PotentialField(5 * np.cos(2 * np.pi * g.nodes)), InteractionSpec.soft_coulomb(), 1.0)
sol = ground_state(H)
R = assemble_lro(sol)
print("response matrix:", {k: (round(v, 6) if isinstance(v, float) else v) for k, v in R.report().items()})

u = PotentialField(30 * (np.cos(np.pi * g.nodes) + 0.5 * np.cos(2 * np.pi * g.nodes)))
exact = lro_apply(sol, u)
prev = None
for eps in (1e-3, 5e-4, 2.5e-4):
    rp = dens(H.basis, ground_state(H.with_parameters(H.potential + u * eps)).psi0)
    rm = dens(H.basis, ground_state(H.with_parameters(H.potential - u * eps)).psi0)
    err = h1_norm((rp - rm) / (2 * eps) - exact, g)
    print(f"eps={eps:.1e}  H1 error {err:.3e}" + (f"  ratio {prev / err:.3f}" if prev else ""))
    prev = err
print(f"response to a constant: {np.abs(lro_apply(sol, np.ones(g.n))).max():.1e}")

small = ground_state(assemble_hamiltonian(Grid(12), 2, PotentialField(5 * np.cos(2 * np.pi * Grid(12).nodes)), InteractionSpec.soft_coulomb(), 1.0))
rep = projector_derivative_check(small, PotentialField(30 * np.cos(np.pi * Grid(12).nodes)), mu=0.5)
print("projector derivative:", rep.to_dict())
