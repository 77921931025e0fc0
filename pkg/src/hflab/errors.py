"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for configuration problems, 2 for convergence failures and 3 for
numerical or conditioning failures.
"""

from __future__ import annotations


class HFLabError(Exception):
    exit_code = 3


class ConfigurationError(HFLabError, ValueError):
    exit_code = 1


class DomainError(HFLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 1


class ConvergenceError(HFLabError):
    exit_code = 2

    def __init__(self, message: str, energy_trace=None):
        super().__init__(message)
        self.energy_trace = list(energy_trace or [])


class SpectrumError(HFLabError):
    """A requested bound state does not exist in the discretized channel."""


class PrecisionError(HFLabError):
    """Grid samples are too noisy for the requested analysis."""


class ConditioningError(HFLabError):
    def __init__(self, message: str, nearest_eigenvalue: float | None = None):
        super().__init__(message)
        self.nearest_eigenvalue = nearest_eigenvalue


class ExtendGridError(HFLabError):
    """The grid cannot support the requested continuum energy."""


class MeshRefinementError(HFLabError):
    """Phase-shift branch tracking failed on the given energy mesh."""


class DegenerateSolutionError(HFLabError):
    """Regular and irregular solutions are (numerically) linearly dependent."""


class InstabilityError(HFLabError):
    """Model parameters give no real positive mean-field solution."""
