"""Exception types raised across the package."""


class AgileRadarError(Exception):
    """Base class for all package errors."""


class ConfigError(AgileRadarError, ValueError):
    """Invalid radar configuration, plan or experiment spec."""


class InfeasibleSceneError(AgileRadarError, ValueError):
    """More scatterers requested than there are grid cells."""


class DegenerateProblemError(AgileRadarError, ValueError):
    """A recovery problem with no usable observations."""


class SolverError(AgileRadarError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class IsolationError(AgileRadarError, RuntimeError):
    """Echo isolation failed on an ill-conditioned support."""


class RefinementError(AgileRadarError, RuntimeError):
    """Least-squares intensity refinement on a rank-deficient steering matrix."""


class UndefinedMetricError(AgileRadarError, ValueError):
    """A metric requested on an empty population."""


class DomainError(AgileRadarError, ValueError):
    """Arguments outside the domain where a formula holds."""
