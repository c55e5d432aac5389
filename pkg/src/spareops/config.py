"""Scalar model configuration for the in-plane spare replenishment policy.

Unit conventions used throughout the package: time in days, mass in kg,
currency in M$. Rates carry their reference period in the field name
(``lambda_sat_per_year``, ``c_hold_per_year``); everything reported by the
metrics layer is per day.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

from .errors import ConfigError

#: Tolerance used when checking for integral tau_lv / tau_mc ratios.
_RATIO_TOL = 1e-9


@dataclass(frozen=True)
class PolicyConfig:
    """All scalar parameters of one (r, q) policy evaluation.

    Fields
    ------
    q : order size, satellites per replenishment (>= 1)
    r : reorder point, satellites (>= 0); an order is placed whenever the
        reviewed stock level is <= r and no order is outstanding
    lambda_sat_per_year : failure rate per operational satellite, 1/year
    mu_lv_days : mean of the exponential lead-time component, days
    tau_lv_days : fixed order-processing delay, days
    c_build : manufacturing cost, M$/satellite
    c_hold_per_year : holding cost, M$/satellite/year
    c_lv_unit : launch cost per unit mass, M$/kg
    c_lv_full : full-vehicle contract cost, M$
    m_sat : satellite mass, kg
    m_payload : launch vehicle payload capacity, kg
    rideshare_available : whether per-unit-mass launch pricing is offered
    epsilon : acceptable expected shortage per plane, satellites
    n_sat_nominal : nominal operational satellites per plane
    n_orbit : number of constellation planes
    tau_mc_days : discrete time step, days
    days_per_year : calendar conversion constant
    """

    q: int
    r: int
    lambda_sat_per_year: float
    mu_lv_days: float
    tau_lv_days: float
    c_build: float
    c_hold_per_year: float
    c_lv_unit: float
    c_lv_full: float
    m_sat: float
    m_payload: float
    rideshare_available: bool
    epsilon: float
    n_sat_nominal: int = 40
    n_orbit: int = 40
    tau_mc_days: float = 0.5
    days_per_year: float = 365.25

    def __post_init__(self) -> None:
        _require_int(self.q, "q", minimum=1)
        _require_int(self.r, "r", minimum=0)
        _require_int(self.n_sat_nominal, "n_sat_nominal", minimum=1)
        _require_int(self.n_orbit, "n_orbit", minimum=1)
        for key in ("lambda_sat_per_year", "mu_lv_days", "tau_mc_days",
                    "days_per_year", "c_build", "c_hold_per_year",
                    "c_lv_unit", "c_lv_full", "m_sat", "m_payload"):
            _require_real(getattr(self, key), key, strictly_positive=True)
        _require_real(self.tau_lv_days, "tau_lv_days")
        _require_real(self.epsilon, "epsilon")
        if type(self.rideshare_available) is not bool:
            raise ConfigError("rideshare_available must be a boolean")
        ratio = self.tau_lv_days / self.tau_mc_days
        if abs(ratio - round(ratio)) > _RATIO_TOL:
            warnings.warn(
                f"tau_lv_days / tau_mc_days = {ratio:.6g} is not an integer; "
                "the fixed delay is rounded up to whole steps, which blurs the "
                "lead-time discretization. Prefer a tau_mc_days that divides "
                "tau_lv_days.",
                stacklevel=2,
            )

    @property
    def n_sat(self) -> int:
        """Maximum in-plane state level, q + r."""
        return self.q + self.r

    @property
    def lambda_step(self) -> float:
        """Per-satellite failure rate per time step (dimensionless)."""
        return self.lambda_sat_per_year * self.tau_mc_days / self.days_per_year

    def to_dict(self) -> dict:
        return asdict(self)


def _require_int(value, key: str, minimum: int) -> None:
    if type(value) is bool or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")


def _require_real(value, key: str, strictly_positive: bool = False) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if strictly_positive and not value > 0:
        raise ConfigError(f"{key} must be > 0, got {value}")
    if not strictly_positive and value < 0:
        raise ConfigError(f"{key} must be >= 0, got {value}")
