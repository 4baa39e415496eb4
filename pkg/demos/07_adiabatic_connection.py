"""Adiabatic connection at fixed density with analyticity diagnostics.

Run with ``python3 demos/07_adiabatic_connection.py``.
"""

import numpy as np

from ksdft1d import Grid, InteractionSpec, PotentialField, ac_sweep, assemble_hamiltonian, forward

g = Grid(24)
w = InteractionSpec.soft_coulomb()
_, rho = forward(assemble_hamiltonian(g, 2, PotentialField(10 * np.cos(2 * np.pi * g.nodes)), w, 1.0))
sweep = ac_sweep(g, rho, w, np.linspace(0.0, 0.5, 11))
print(f"{'lam':>5s} {'F_LL':>14s} {'E_xc':>14s} {'gap':>10s}")
for lam, F, Exc, EH, gap in sweep.rows():
    print(f"{lam:5.2f} {F:14.9f} {Exc:14.9f} {gap:10.5f}")
d = sweep.diagnostics()
print("polynomial fit residuals:", {k: f"{v:.1e}" for k, v in d["fit_residuals"].items()})
print(f"mean decay ratio {d['fit_decay']:.3f}, F_LL monotone: {d['monotone_F_LL']}")
