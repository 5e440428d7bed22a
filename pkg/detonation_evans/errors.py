"""
Error families for the detonation stability toolkit.

Library code raises these; the outer surfaces translate them:
- main.py maps each family to a process exit code
- tools.py turns them into error dictionaries

Every family carries the exit code the command line reports for it.
"""

from typing import Optional


class DetonationEvansError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


# ============================================================================
# FAMILIES
# ============================================================================

class ConfigError(DetonationEvansError):
    """Unreadable, malformed or unknown configuration."""

    exit_code = 2


class DomainError(DetonationEvansError, ValueError):
    """Inputs outside the admissible physical or numerical domain."""

    exit_code = 3


class SolverError(DetonationEvansError):
    """A numerical solver failed to produce an acceptable answer."""

    exit_code = 4


class ContourError(DetonationEvansError):
    """A contour evaluation could not be resolved."""

    exit_code = 5


# ============================================================================
# DOMAIN ERRORS
# ============================================================================

class CJLimitExceeded(DomainError):
    """Heat release above the Chapman-Jouguet limit (negative discriminant)."""


class IgnitionFailure(DomainError):
    """The Neumann spike is not hot enough to ignite the mixture."""


class DomainTooShort(DomainError):
    """A truncated spatial domain cannot resolve the requested decay."""


class IllConditionedEnds(DomainError):
    """End-state Jacobians are (nearly) defective or have the wrong splitting."""


# ============================================================================
# SOLVER ERRORS
# ============================================================================

class ProfileNotFound(SolverError):
    """The boundary-value solver did not converge."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class ContinuationStalled(SolverError):
    """Parameter continuation could not reach its target."""

    def __init__(self, message: str, frontier=None):
        super().__init__(message)
        # last parameter set that was solved successfully
        self.frontier = frontier


class EvansIntegrationFailure(SolverError):
    """The Evans frame ODE integrator failed."""


class SplittingLost(SolverError):
    """Consistent splitting of the limit matrices failed at a spectral value."""

    def __init__(self, message: str, spectral_value: Optional[complex] = None):
        super().__init__(message)
        self.spectral_value = spectral_value


class FitError(SolverError):
    """Least-squares boundary fit is rank deficient or underdetermined."""


class BadBracket(SolverError):
    """Both ends of a bisection bracket have the same stability status."""


# ============================================================================
# CONTOUR ERRORS
# ============================================================================

class UnresolvedContour(ContourError):
    """Adaptive contour refinement hit its cap, or moments were not additive."""

    def __init__(self, message: str, segments=None):
        super().__init__(message)
        self.segments = list(segments or [])


class ContourThroughZero(ContourError):
    """The Evans function (nearly) vanishes on the contour itself."""
