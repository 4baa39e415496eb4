"""Exact one-dimensional Kohn-Sham DFT for spinless fermions on (0, 1).

The package discretizes the unit interval with a cell-centred Neumann
grid, diagonalizes the few-particle Hamiltonian exactly, and builds the
density-to-potential machinery on top of it: linear response, Newton
inversion, Levy-Lieb / exchange / Goerling-Levy functionals and the
holomorphic extension to complex potentials.
"""

__version__ = "0.1.0"

from .complex_ext import (
    ComplexPotential,
    complex_density,
    complex_ground,
    complex_invert,
    complex_response,
    eigenvalue_property_residual,
    holomorphy_check,
)
from .density import apply_B_adjoint, check_IplusK_invertible, dens, k_operator, mixed_density, pair_density
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateGroundStateError,
    DensityError,
    IllConditionedError,
    KSDFTError,
    NonConvergenceError,
    SelectionAmbiguityError,
    SolverError,
)
from .functionals import (
    ac_sweep,
    adiabatic_derivative,
    exchange_energy,
    exchange_potential,
    gl2_energy,
    hartree,
    hartree_potential,
    levy_lieb,
    t_ks,
)
from .grid import (
    Grid,
    PotentialField,
    cosine_basis,
    gauge_fix,
    h1_inner,
    h1_norm,
    hneg1_norm,
    make_grid,
    neumann_eigenvalues,
    neumann_laplacian,
    quotient_norm,
)
from .inversion import forward, hk_uniqueness_check, invert_density, lipschitz_probe
from .manybody import (
    InteractionSpec,
    TupleBasis,
    assemble_hamiltonian,
    ground_state,
    reduced_resolvent_apply,
    spectrum,
)
from .response import assemble_lro, invert_lro, lro_apply, projector_derivative

__all__ = [
    "__version__",
    "ComplexPotential",
    "complex_density",
    "complex_ground",
    "complex_invert",
    "complex_response",
    "eigenvalue_property_residual",
    "holomorphy_check",
    "apply_B_adjoint",
    "check_IplusK_invertible",
    "dens",
    "k_operator",
    "mixed_density",
    "pair_density",
    "ConfigurationError",
    "ConsistencyError",
    "DegenerateGroundStateError",
    "DensityError",
    "IllConditionedError",
    "KSDFTError",
    "NonConvergenceError",
    "SelectionAmbiguityError",
    "SolverError",
    "ac_sweep",
    "adiabatic_derivative",
    "exchange_energy",
    "exchange_potential",
    "gl2_energy",
    "hartree",
    "hartree_potential",
    "levy_lieb",
    "t_ks",
    "Grid",
    "PotentialField",
    "cosine_basis",
    "gauge_fix",
    "h1_inner",
    "h1_norm",
    "hneg1_norm",
    "make_grid",
    "neumann_eigenvalues",
    "neumann_laplacian",
    "quotient_norm",
    "forward",
    "hk_uniqueness_check",
    "invert_density",
    "lipschitz_probe",
    "InteractionSpec",
    "TupleBasis",
    "assemble_hamiltonian",
    "ground_state",
    "reduced_resolvent_apply",
    "spectrum",
    "assemble_lro",
    "invert_lro",
    "lro_apply",
    "projector_derivative",
]
