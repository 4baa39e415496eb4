"""Exception hierarchy shared by all pipelines.

The CLI maps these onto exit codes: configuration problems exit with 2,
solver failures with 3 and internal-consistency violations with 4.
"""


class KSDFTError(Exception):
    """Base class for all package errors."""


class ConfigurationError(KSDFTError, ValueError):
    """Invalid input: bad grid size, malformed potential, violated precondition."""


class DensityError(ConfigurationError):
    """Density outside the representable set (non-positive node or wrong mass)."""


class SolverError(KSDFTError, RuntimeError):
    """A numerical solve failed or left its validity regime."""


class DegenerateGroundStateError(SolverError):
    """Spectral gap below the floor; the ground state is not simple."""


class NonConvergenceError(SolverError):
    """Iteration stopped without meeting its tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class IllConditionedError(SolverError):
    """Linear system too ill-conditioned to trust."""


class SelectionAmbiguityError(SolverError):
    """Complex eigenvalue selection by smallest real part is not well defined."""


class ConsistencyError(KSDFTError, AssertionError):
    """Two computation paths that must agree did not."""
