"""Analytic evaluation and optimization of direct spare replenishment
policies for satellite constellations, with a Monte Carlo validation
oracle.

Each orbital plane is modeled as a discrete-time Markov (r, q) inventory
system: satellites fail at a Poisson rate, a reorder of q spares is placed
whenever the plane's count drops to the reorder point r, and deliveries
arrive after a shifted-exponential lead time. The stationary cycle
distributions feed cost and resilience metrics, a constrained grid-search
optimizer, and a simulation-based validation harness.
"""

__version__ = "0.1.0"

from .analysis import (
    AnalysisResult,
    analyze,
    cycle_distribution,
    io_distribution,
    lt_distribution,
    post_delivery_distribution,
    reorder_distribution,
    stationary_pair,
)
from .config import PolicyConfig
from .errors import (
    AnalysisError,
    ConfigError,
    ConfigMismatchError,
    InfeasibleDesignSpaceError,
    SpareOpsError,
    StationaryConvergenceError,
)
from .markov import (
    LeadTimeModel,
    StateDistribution,
    TransitionMatrices,
    build_failure_matrix,
    build_projections,
    build_replenishment_matrix,
    failure_matrix,
    failure_pmf,
    lead_time_pmf,
)
from .metrics import (
    CostBreakdown,
    LaunchMode,
    constraint_eval,
    cost_breakdown,
    expected_shortage,
    expected_spares,
    mean_stock,
)
from .montecarlo import (
    ParameterBounds,
    SimStats,
    ValidationCase,
    ValidationSuite,
    lhs_validation_suite,
    simulate,
    validate,
)
from .optimize import (
    GridPoint,
    OptimizationResult,
    SweepPoint,
    optimize,
    sweep_failure_rate,
)

__all__ = [
    "AnalysisError",
    "AnalysisResult",
    "ConfigError",
    "ConfigMismatchError",
    "CostBreakdown",
    "GridPoint",
    "InfeasibleDesignSpaceError",
    "LaunchMode",
    "LeadTimeModel",
    "OptimizationResult",
    "ParameterBounds",
    "PolicyConfig",
    "SimStats",
    "SpareOpsError",
    "StateDistribution",
    "StationaryConvergenceError",
    "SweepPoint",
    "TransitionMatrices",
    "ValidationCase",
    "ValidationSuite",
    "analyze",
    "build_failure_matrix",
    "build_projections",
    "build_replenishment_matrix",
    "constraint_eval",
    "cost_breakdown",
    "cycle_distribution",
    "expected_shortage",
    "expected_spares",
    "failure_matrix",
    "failure_pmf",
    "io_distribution",
    "lead_time_pmf",
    "lhs_validation_suite",
    "lt_distribution",
    "mean_stock",
    "optimize",
    "post_delivery_distribution",
    "reorder_distribution",
    "simulate",
    "stationary_pair",
    "sweep_failure_rate",
    "validate",
]
