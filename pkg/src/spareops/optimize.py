"""Exhaustive constrained search over the integer (q, r) design grid."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .analysis import analyze
from .config import PolicyConfig
from .errors import InfeasibleDesignSpaceError
from .metrics import CostBreakdown, constraint_eval, cost_breakdown, expected_shortage


@dataclass(frozen=True)
class GridPoint:
    """One evaluated (q, r) design."""

    q: int
    r: int
    cost: CostBreakdown
    shortage: float
    g1: float
    g2: float
    feasible: bool
    tau_rc_days: float


@dataclass(frozen=True)
class OptimizationResult:
    """Best feasible design plus the full evaluated grid."""

    best: GridPoint
    grid: tuple[GridPoint, ...]
    q_range: tuple[int, int]
    r_range: tuple[int, int]


@dataclass(frozen=True)
class SweepPoint:
    """Per-failure-rate optimization outcome; ``error`` is set on failure."""

    lambda_sat_per_year: float
    result: OptimizationResult | None
    error: str | None


def _evaluate(cfg: PolicyConfig) -> GridPoint:
    result = analyze(cfg)
    cost = cost_breakdown(result, cfg)
    g1, g2 = constraint_eval(result, cfg)
    return GridPoint(
        q=cfg.q,
        r=cfg.r,
        cost=cost,
        shortage=expected_shortage(result.pi_rc, cfg.n_sat_nominal),
        g1=g1,
        g2=g2,
        feasible=g1 <= 0.0 and g2 <= 0.0,
        tau_rc_days=result.tau_rc_days,
    )


def optimize(
    cfg_template: PolicyConfig,
    q_range: tuple[int, int],
    r_range: tuple[int, int],
) -> OptimizationResult:
    """Minimize the total cost rate over the inclusive (q, r) grid.

    Every grid point is evaluated; the best point is the feasible one with
    the smallest total cost, ties broken toward smaller q then smaller r.
    Raises :class:`InfeasibleDesignSpaceError` when nothing is feasible,
    attaching the minimum-shortage point as a diagnostic.
    """
    q_lo, q_hi = map(int, q_range)
    r_lo, r_hi = map(int, r_range)
    if q_lo > q_hi or r_lo > r_hi:
        raise ValueError(f"empty search ranges q={q_range}, r={r_range}")
    if q_lo < 1:
        raise ValueError(f"q range must start at 1 or above, got {q_lo}")
    if r_lo < 0:
        raise ValueError(f"r range must start at 0 or above, got {r_lo}")
    grid = []
    for q in range(q_lo, q_hi + 1):
        for r in range(r_lo, r_hi + 1):
            grid.append(_evaluate(replace(cfg_template, q=q, r=r)))
    best = None
    for point in grid:
        if not point.feasible:
            continue
        key = (point.cost.c_total_rate, point.q, point.r)
        if best is None or key < (best.cost.c_total_rate, best.q, best.r):
            best = point
    if best is None:
        nearest = min(grid, key=lambda p: (p.shortage, p.q, p.r))
        raise InfeasibleDesignSpaceError(
            f"no feasible design in q={q_range} x r={r_range}; smallest "
            f"shortage {nearest.shortage:.4g} at (q={nearest.q}, r={nearest.r}) "
            f"with g2={nearest.g2:.4g}",
            diagnostic=nearest,
        )
    return OptimizationResult(
        best=best,
        grid=tuple(grid),
        q_range=(q_lo, q_hi),
        r_range=(r_lo, r_hi),
    )


def sweep_failure_rate(
    cfg_template: PolicyConfig,
    lambda_grid: list[float],
    q_range: tuple[int, int],
    r_range: tuple[int, int],
) -> list[SweepPoint]:
    """Re-optimize the design for each failure rate in ascending order.

    Failures at individual rates are captured in the returned entries
    rather than aborting the sweep.
    """
    if not lambda_grid:
        raise ValueError("lambda_grid must not be empty")
    if any(lam <= 0 for lam in lambda_grid):
        raise ValueError("failure rates must be positive")
    if any(b < a for a, b in zip(lambda_grid, lambda_grid[1:])):
        raise ValueError("lambda_grid must be ascending")
    points = []
    for lam in lambda_grid:
        cfg = replace(cfg_template, lambda_sat_per_year=float(lam))
        try:
            points.append(SweepPoint(float(lam), optimize(cfg, q_range, r_range), None))
        except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
            points.append(SweepPoint(float(lam), None, str(exc)))
    return points
