"""Cost and resilience metrics derived from the stationary analysis.

All cost rates are expressed in M$/day for the whole constellation
(``n_orbit`` planes); stock metrics are per plane.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .analysis import AnalysisResult
from .config import PolicyConfig
from .markov import StateDistribution


class LaunchMode(str, enum.Enum):
    """Which branch of the launch-pricing minimum applies."""

    PER_UNIT = "per_unit"
    FULL_CONTRACT = "full_contract"


@dataclass(frozen=True)
class CostBreakdown:
    """Operating cost rates of one policy, M$/day."""

    c_build_rate: float
    c_hold_rate: float
    c_launch_rate: float
    c_total_rate: float
    launch_mode: LaunchMode
    m_total_kg: float

    def __post_init__(self) -> None:
        expected = self.c_build_rate + self.c_hold_rate + self.c_launch_rate
        if self.c_total_rate != expected:
            raise ValueError("c_total_rate must equal the sum of its components")
        for name in ("c_build_rate", "c_hold_rate", "c_launch_rate", "m_total_kg"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def mean_stock(pi_rc: StateDistribution) -> float:
    """Expected per-plane satellite count under ``pi_rc``."""
    return float(pi_rc.states @ pi_rc.probs)


def expected_shortage(pi_rc: StateDistribution, n_nominal: int) -> float:
    """Expected per-plane deficit below the nominal count.

    Sums (n_nominal - i) over states i below nominal, weighted by the
    fraction of time spent there.
    """
    deficit = np.clip(n_nominal - pi_rc.states, 0, None)
    return float(deficit @ pi_rc.probs)


def expected_spares(dist: StateDistribution, n_nominal: int) -> float:
    """Expected per-plane satellite count in excess of nominal."""
    surplus = np.clip(dist.states - n_nominal, 0, None)
    return float(surplus @ dist.probs)


def cost_breakdown(result: AnalysisResult, cfg: PolicyConfig) -> CostBreakdown:
    """Operating cost rates for one analyzed policy.

    Build and launch costs amortize one order (q satellites, one vehicle)
    over the replenishment cycle. The holding cost is assessed on the
    expected number of spares carried immediately after each delivery,
    i.e. on the post-delivery distribution: that is the spare inventory
    the operator pays to keep on orbit through the cycle.
    """
    tau_rc = result.tau_rc_days
    if tau_rc <= 0:
        raise ValueError(f"tau_rc_days must be > 0, got {tau_rc}")
    c_build_rate = cfg.c_build * cfg.n_orbit * cfg.q / tau_rc
    c_hold_rate = (
        cfg.c_hold_per_year
        / cfg.days_per_year
        * cfg.n_orbit
        * expected_spares(result.pi_q, cfg.n_sat_nominal)
    )
    m_total = cfg.m_sat * cfg.q
    per_unit_cost = cfg.c_lv_unit * m_total
    if cfg.rideshare_available and per_unit_cost < cfg.c_lv_full:
        launch_mode = LaunchMode.PER_UNIT
        per_launch = per_unit_cost
    else:
        launch_mode = LaunchMode.FULL_CONTRACT
        per_launch = cfg.c_lv_full
    c_launch_rate = cfg.n_orbit * per_launch / tau_rc
    return CostBreakdown(
        c_build_rate=c_build_rate,
        c_hold_rate=c_hold_rate,
        c_launch_rate=c_launch_rate,
        c_total_rate=c_build_rate + c_hold_rate + c_launch_rate,
        launch_mode=launch_mode,
        m_total_kg=m_total,
    )


def constraint_eval(result: AnalysisResult, cfg: PolicyConfig) -> tuple[float, float]:
    """Constraint values (g1, g2); the design is feasible iff both are <= 0.

    g1 compares the expected shortage against the configured threshold;
    g2 compares the order payload mass against the vehicle capacity.
    """
    g1 = expected_shortage(result.pi_rc, cfg.n_sat_nominal) - cfg.epsilon
    g2 = cfg.m_sat * cfg.q - cfg.m_payload
    return g1, g2
