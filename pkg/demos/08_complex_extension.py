"""Complex potentials and couplings near the real sector.

Run with ``python3 demos/08_complex_extension.py``.
"""

import numpy as np

from ksdft1d import (
    ComplexPotential,
    Grid,
    InteractionSpec,
    PotentialField,
    complex_density,
    complex_ground,
    complex_invert,
    eigenvalue_property_residual,
    holomorphy_check,
)
from ksdft1d.complex_ext import complex_quotient_norm

g = Grid(12)
w = InteractionSpec.soft_coulomb()
v_re = PotentialField(8 * np.cos(2 * np.pi * g.nodes))
v = ComplexPotential.from_parts(v_re, PotentialField(1e-2 * np.sin(np.pi * g.nodes)))
lam = complex(1.0, 1e-2)

sol = complex_ground(g, 2, v, w, lam)
P = sol.projector()
rho = complex_density(sol)
print(f"E = {sol.E:.10f}")
print(f"|P^2 - P| = {np.abs(P @ P - P).max():.1e}, Tr P = {np.trace(P):.12f}, int rho = {g.h * rho.sum():.12f}")
print("eigenvalue property residuals:", {k: v for k, v in eigenvalue_property_residual(sol).items() if k in ("bilinear", "sesquilinear")})

inv = complex_invert(g, 2, rho, w, lam)
print(f"complex inversion: {inv.iterations} Newton steps, distance {complex_quotient_norm(inv.v - v, g):.1e}")

d = PotentialField(np.cos(np.pi * g.nodes) + 0.5 * np.cos(2 * np.pi * g.nodes))
for q in ("density", "F", "conj_density"):
    rep = holomorphy_check(g, 2, v, w, lam, d, eps=(1e-2, 5e-3, 2.5e-3), quantity=q, scheme="central")
    print(f"Cauchy-Riemann [{q:12s}] residuals {['%.1e' % r for r in rep.residuals]} orders {np.round(rep.orders, 3)}")
