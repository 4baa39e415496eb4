"""Levy-Lieb functional, exchange and second-order correlation.

Run with ``python3 demos/06_functionals.py``.
"""

import numpy as np

from ksdft1d import (
    Grid,
    InteractionSpec,
    PotentialField,
    assemble_hamiltonian,
    exchange_energy,
    exchange_potential,
    forward,
    gl2_energy,
    hartree,
    levy_lieb,
)

g = Grid(24)
w = InteractionSpec.soft_coulomb()
_, rho = forward(assemble_hamiltonian(g, 2, PotentialField(10 * np.cos(2 * np.pi * g.nodes)), w, 1.0))
ks = levy_lieb(g, rho, w, 0.0, tol=1e-11)
E_H = hartree(g, rho, w)
E_x = exchange_energy(g, rho, w, ks=ks)
print(f"T_KS = {ks.F:.10f}\nE_H  = {E_H:.10f}\nE_x  = {E_x:.10f}")

gl2 = gl2_energy(g, rho, w, ks=ks)
print(f"E_c^GL2 = {gl2.energy:.10f} (resolvent {gl2.resolvent_value:.10f}, largest term {gl2.terms.max():.1e})")

# The weak-coupling limit of the exact correlation energy is the GL2 value.
for lam in (4e-2, 2e-2, 1e-2, 5e-3):
    F = levy_lieb(g, rho, w, lam, v0=ks.v, tol=1e-11).F
    print(f"lam={lam:.0e}: lam E_c / lam^2 = {(F - ks.F - lam * (E_H + E_x)) / lam**2:.8f}")

vx = exchange_potential(g, rho, w, ks=ks)
print("v_x at the first nodes:", np.round(vx.smooth[:6], 5))
