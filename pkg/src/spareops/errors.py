"""Exception types shared across the package."""

from __future__ import annotations


class SpareOpsError(Exception):
    """Base class for all spareops errors."""


class ConfigError(SpareOpsError, ValueError):
    """Invalid or inconsistent configuration input."""


class AnalysisError(SpareOpsError, RuntimeError):
    """The analytic pipeline cannot produce a valid result."""


class StationaryConvergenceError(AnalysisError):
    """The stationary fixed point could not be resolved to tolerance.

    Carries the final L1 residual so callers can report diagnostics.
    """

    def __init__(self, residual: float, detail: str = ""):
        self.residual = residual
        msg = f"stationary solve did not converge: L1 residual {residual:.3e}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class InfeasibleDesignSpaceError(SpareOpsError, RuntimeError):
    """No grid point satisfies the constraints.

    ``diagnostic`` holds the evaluated record with the smallest expected
    shortage, which is usually the most informative near-miss.
    """

    def __init__(self, msg: str, diagnostic=None):
        self.diagnostic = diagnostic
        super().__init__(msg)


class ConfigMismatchError(SpareOpsError, ValueError):
    """An analytic result was paired with a different configuration."""
