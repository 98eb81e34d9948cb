"""Shared exception and warning types."""


class DomainError(ValueError):
    """Input lies outside the physical domain of the model."""


class DegenerateInputError(ValueError):
    """Zero or otherwise degenerate input where a direction is required."""


class ForbiddenTransitionError(ValueError):
    """Dipole selection rules forbid the requested transition."""


class ConsistencyError(ValueError):
    """Internally inconsistent inputs (normalization, completeness)."""


class CapacityError(RuntimeError):
    """Hilbert-space dimension exceeds the configured memory budget."""


class CapacityWarning(UserWarning):
    """Hilbert-space dimension is large; solves may be slow."""


class SolverError(RuntimeError):
    """Generic numerical-solver failure."""


class NonUniqueSteadyStateError(SolverError):
    """The Liouvillian null space is degenerate or traceless."""


class ConvergenceError(SolverError):
    """Residual of a linear or iterative solve exceeded tolerance."""


class StiffnessError(SolverError):
    """Time integration failed; try smaller cutoffs or a finer grid."""


class FitError(RuntimeError):
    """Least-squares fit did not converge."""


class BoundaryWarning(UserWarning):
    """A fitted parameter is pinned at a truncation bound."""


class UndefinedTransmissionError(ValueError):
    """Transmission is undefined without a drive."""


class ConfigError(ValueError):
    """Invalid run configuration."""
