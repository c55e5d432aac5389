"""Shared fixtures-in-spirit: config factories and random instance builders."""

from __future__ import annotations

import numpy as np

from spareops import PolicyConfig, TransitionMatrices
from spareops.markov import (
    build_projections,
    build_replenishment_matrix,
    failure_matrix,
    failure_stay_complement,
)

BASELINE_KWARGS = dict(
    q=2,
    r=39,
    lambda_sat_per_year=0.05,
    mu_lv_days=10.0,
    tau_lv_days=10.0,
    c_build=0.5,
    c_hold_per_year=0.25,
    c_lv_unit=0.03,
    c_lv_full=7.5,
    m_sat=150.0,
    m_payload=300.0,
    rideshare_available=True,
    epsilon=0.25,
)


def make_config(**overrides) -> PolicyConfig:
    kwargs = dict(BASELINE_KWARGS)
    kwargs.update(overrides)
    return PolicyConfig(**kwargs)


def config_with_step_rate(lambda_step: float, **overrides) -> PolicyConfig:
    """Config whose derived per-step failure rate equals ``lambda_step``."""
    tau = overrides.get("tau_mc_days", 0.5)
    dpy = overrides.get("days_per_year", 365.25)
    return make_config(lambda_sat_per_year=lambda_step * dpy / tau, **overrides)


def random_config(rng: np.random.Generator, max_n_sat: int = 60) -> PolicyConfig:
    """Valid random policy with a moderate state-space size."""
    q = int(rng.integers(1, 7))
    r = int(rng.integers(0, min(max_n_sat - q, 45) + 1))
    n_nominal = int(rng.integers(1, 41))
    lambda_step = float(rng.uniform(1e-4, 0.2))
    tau = float(rng.choice([0.25, 0.5, 1.0]))
    mu = float(rng.uniform(2.0, 40.0))
    tau_lv = float(rng.integers(0, 41)) * tau
    return make_config(
        q=q,
        r=r,
        n_sat_nominal=n_nominal,
        lambda_sat_per_year=lambda_step * 365.25 / tau,
        tau_mc_days=tau,
        mu_lv_days=mu,
        tau_lv_days=tau_lv,
    )


def raw_matrices(n_sat: int, n_nominal: int, lambda_step: float, r: int, q: int) -> TransitionMatrices:
    """Build matrices directly from scalars, bypassing PolicyConfig."""
    c_plus, c_minus = build_projections(n_sat, r)
    return TransitionMatrices(
        p_f=failure_matrix(n_sat, n_nominal, lambda_step),
        p_q=build_replenishment_matrix(n_sat, q),
        c_r_plus=c_plus,
        c_r_minus=c_minus,
        n_sat=n_sat,
        r=r,
        q=q,
        stay_complement=failure_stay_complement(n_sat, n_nominal, lambda_step),
    )


def random_distribution(rng: np.random.Generator, n_sat: int) -> np.ndarray:
    """Random normalized probability vector of size n_sat + 1."""
    vec = rng.random(n_sat + 1)
    return vec / vec.sum()
