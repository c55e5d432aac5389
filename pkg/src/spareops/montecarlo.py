"""Monte Carlo simulation of the per-plane replenishment system.

Serves as the independent validation oracle for the analytic pipeline. The
simulated dynamics follow the same step convention as the analysis: at
each step a due delivery is applied first, then a Poisson failure draw
with mean ``min(X, n_sat_nominal) * lambda_step``, then the reorder review
(order q with lead time ``tau_lv + Exp(mu_lv)`` days whenever X <= r and
no order is outstanding). The state after the failure phase of every step
is tallied into the histogram.

Implementation note: steps without failures or deliveries leave the state
unchanged, so the replication loop advances event-to-event, drawing the
gap to the next failure step from the matching geometric law and crediting
the skipped steps to the histogram in one span. This is distributionally
identical to stepping one step at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np
from scipy.stats import qmc

from .analysis import AnalysisResult, analyze
from .config import PolicyConfig
from .errors import ConfigMismatchError
from .markov import StateDistribution, lead_time_pmf
from .metrics import expected_shortage, mean_stock

#: Denominator floor for the shortage relative error (shortages near zero
#: would otherwise blow the ratio up).
SHORTAGE_REL_ERR_FLOOR = 1e-6

#: Burn-in safety factor applied to the fluid relaxation estimate.
_RELAX_FACTOR = 3.0


@dataclass(frozen=True, eq=False)
class SimStats:
    """Aggregated simulation output, with optional analytic comparison."""

    histogram: StateDistribution
    m_sim: float
    s_sim: float
    n_reps: int
    horizon_days: float
    seed: int
    burn_in_steps: int
    rel_err_m: float | None = None
    rel_err_s: float | None = None


@dataclass(frozen=True)
class ParameterBounds:
    """Inclusive sampling box for the validation suite."""

    lambda_sat_per_year: tuple[float, float] = (0.001, 0.5)
    tau_lv_days: tuple[float, float] = (0.0, 60.0)
    mu_lv_days: tuple[float, float] = (5.0, 60.0)
    q: tuple[int, int] = (1, 10)
    r: tuple[int, int] = (35, 45)

    @classmethod
    def for_nominal(cls, n_sat_nominal: int) -> "ParameterBounds":
        """Default box with the reorder bound centred on the nominal count."""
        return cls(r=(max(0, n_sat_nominal - 5), n_sat_nominal + 5))


@dataclass(frozen=True)
class ValidationCase:
    """One validated sample of the suite; ``error`` is set on failure."""

    case_id: int
    lambda_sat_per_year: float
    tau_lv_days: float
    mu_lv_days: float
    q: int
    r: int
    seed: int
    m_analytic: float | None = None
    s_analytic: float | None = None
    stats: SimStats | None = None
    error: str | None = None


@dataclass(frozen=True)
class ValidationSuite:
    """Per-case records plus mean / 95th-percentile error summaries."""

    cases: tuple[ValidationCase, ...]
    mean_rel_err_m: float
    p95_rel_err_m: float
    mean_rel_err_s: float
    p95_rel_err_s: float
    n_cases: int
    seed: int
    horizon_days: float
    n_reps: int


class _FailureSampler:
    """Tabulated per-state Poisson failure draws.

    For each state the unconditional CDF and the CDF conditional on at
    least one failure are precomputed, so a single uniform inverts either.
    """

    def __init__(self, n_sat: int, n_nominal: int, lambda_step: float):
        self.p_fail = np.zeros(n_sat + 1)
        self.full_cdf: list[np.ndarray] = []
        self.cond_cdf: list[np.ndarray] = []
        for x in range(n_sat + 1):
            mean = min(x, n_nominal) * lambda_step
            p0 = math.exp(-mean)
            self.p_fail[x] = -math.expm1(-mean)
            cdf = [p0]
            pk = p0
            k = 0
            while cdf[-1] < 1.0 and k < 100_000:
                k += 1
                pk = pk * mean / k
                cdf.append(min(cdf[-1] + pk, 1.0))
            full = np.array(cdf)
            self.full_cdf.append(full)
            if self.p_fail[x] > 0.0:
                self.cond_cdf.append(np.minimum((full[1:] - p0) / (1.0 - p0), 1.0))
            else:
                self.cond_cdf.append(np.array([1.0]))


def _relaxation_steps(
    n_sat: int, n_nominal: int, r: int, q: int, lambda_step: float, k_lt: float
) -> float:
    """Fluid-model step count for the cycle state to settle from a full plane.

    Runs the deterministic mean dynamics cycle by cycle until the
    post-delivery level stops moving; the summed duration bounds the
    transient that the stochastic chain needs to forget its initial state.
    """
    x = float(n_sat)
    prev_post = x
    total = 0.0
    for _ in range(1000):
        io_steps = 0.0
        if x > r:
            rate = min(x, n_nominal) * lambda_step
            if rate <= 0.0:
                break
            io_steps = (x - r) / rate
            x = float(r)
        x = max(x - k_lt * min(x, n_nominal) * lambda_step, 0.0) + q
        if abs(x - prev_post) < 0.05:
            break
        prev_post = x
        total += io_steps + k_lt
    return total


def _burn_in_steps(cfg: PolicyConfig) -> int:
    lead = lead_time_pmf(cfg)
    k_lt = lead.mean_steps
    one_year = cfg.days_per_year / cfg.tau_mc_days
    relax = _relaxation_steps(
        cfg.n_sat, cfg.n_sat_nominal, cfg.r, cfg.q, cfg.lambda_step, k_lt
    )
    return math.ceil(max(10.0 * k_lt, one_year, _RELAX_FACTOR * relax))


def _run_replication(
    cfg: PolicyConfig,
    sampler: _FailureSampler,
    n_record_steps: int,
    burn_in_steps: int,
    rng: np.random.Generator,
    counts: np.ndarray,
) -> None:
    """Simulate one plane and add its per-state step tallies to ``counts``.

    ``counts`` is indexed by state (ascending). Steps are numbered from 1;
    the first ``burn_in_steps`` are simulated but not tallied.
    """
    n_sat = cfg.n_sat
    r = cfg.r
    q = cfg.q
    tau = cfg.tau_mc_days
    tau_lv = cfg.tau_lv_days
    mu_lv = cfg.mu_lv_days
    p_fail = sampler.p_fail
    t_total = burn_in_steps + n_record_steps
    first_counted = burn_in_steps + 1
    t = 0
    x = n_sat
    arrival = 0  # 0 = no order outstanding; otherwise the delivery step

    while t < t_total:
        p = p_fail[x]
        fail_step = t + int(rng.geometric(p)) if p > 0.0 else t_total + 1
        if arrival and arrival <= fail_step and arrival <= t_total:
            # Delivery lands before (or at) the tentative failure step. The
            # state changes at delivery, so the pending failure draw is
            # abandoned and the delivery step gets a fresh unconditional one.
            step = arrival
            span_lo = max(t + 1, first_counted)
            if step - 1 >= span_lo:
                counts[x] += step - span_lo
            x += q
            fails = int(np.searchsorted(sampler.full_cdf[x], rng.random(), side="right"))
            x = max(x - fails, 0)
            arrival = 0
        elif fail_step <= t_total:
            step = fail_step
            span_lo = max(t + 1, first_counted)
            if step - 1 >= span_lo:
                counts[x] += step - span_lo
            fails = 1 + int(np.searchsorted(sampler.cond_cdf[x], rng.random(), side="right"))
            x = max(x - fails, 0)
        else:
            span_lo = max(t + 1, first_counted)
            if t_total >= span_lo:
                counts[x] += t_total - span_lo + 1
            break
        if step >= first_counted:
            counts[x] += 1
        if x <= r and not arrival:
            lead_days = tau_lv + rng.exponential(mu_lv)
            arrival = step + math.ceil(lead_days / tau)
        t = step


def simulate(cfg: PolicyConfig, horizon_days: float, n_reps: int, seed: int) -> SimStats:
    """Simulate ``n_reps`` independent planes and tally time in each state.

    Planes are independent and identically distributed, so a single plane
    is simulated per replication; constellation-level scaling happens in
    the metrics layer. Each replication owns an RNG substream spawned from
    the root seed, so results for replication i do not depend on n_reps.
    A warm-up of ``max(10 k_lt, one year, 3x fluid relaxation)`` steps is
    discarded before tallying, because comparisons target the steady state
    while every replication starts from a full plane (X = q + r).
    """
    if horizon_days < 100.0 * cfg.tau_mc_days:
        raise ValueError(
            f"horizon_days must cover at least 100 steps "
            f"({100.0 * cfg.tau_mc_days} days), got {horizon_days}"
        )
    if n_reps < 1:
        raise ValueError(f"n_reps must be >= 1, got {n_reps}")
    sampler = _FailureSampler(cfg.n_sat, cfg.n_sat_nominal, cfg.lambda_step)
    burn_in = _burn_in_steps(cfg)
    n_record = int(round(horizon_days / cfg.tau_mc_days))
    counts = np.zeros(cfg.n_sat + 1, dtype=np.int64)
    for child in np.random.SeedSequence(seed).spawn(n_reps):
        _run_replication(cfg, sampler, n_record, burn_in, np.random.default_rng(child), counts)
    total = int(counts.sum())
    expected_total = n_reps * n_record
    if total != expected_total:
        raise RuntimeError(
            f"internal tally mismatch: {total} recorded steps, expected {expected_total}"
        )
    histogram = StateDistribution(counts[::-1] / total, cfg.n_sat)
    return SimStats(
        histogram=histogram,
        m_sim=mean_stock(histogram),
        s_sim=expected_shortage(histogram, cfg.n_sat_nominal),
        n_reps=n_reps,
        horizon_days=horizon_days,
        seed=seed,
        burn_in_steps=burn_in,
    )


def validate(
    cfg: PolicyConfig,
    analytic: AnalysisResult,
    horizon_days: float,
    n_reps: int,
    seed: int,
) -> SimStats:
    """Simulate and attach relative errors against an analytic result.

    The shortage error divides by ``max(S, 1e-6)`` because S is often close
    to zero, which would otherwise amplify the relative error without
    bound.
    """
    if analytic.config != cfg:
        raise ConfigMismatchError(
            "analytic result was computed for a different configuration"
        )
    stats = simulate(cfg, horizon_days, n_reps, seed)
    m_ref = mean_stock(analytic.pi_rc)
    s_ref = expected_shortage(analytic.pi_rc, cfg.n_sat_nominal)
    return dc_replace(
        stats,
        rel_err_m=abs(stats.m_sim - m_ref) / m_ref,
        rel_err_s=abs(stats.s_sim - s_ref) / max(s_ref, SHORTAGE_REL_ERR_FLOOR),
    )


def lhs_validation_suite(
    cfg_template: PolicyConfig,
    n_cases: int,
    seed: int,
    bounds: ParameterBounds | None = None,
    horizon_days: float = 7305.0,
    n_reps: int = 200,
) -> ValidationSuite:
    """Validate the analysis on Latin-hypercube-sampled parameter vectors.

    Samples (lambda, tau_lv, mu_lv, q, r) within ``bounds``, runs
    :func:`validate` per case, and reports mean and 95th-percentile
    relative errors over the cases that completed. Failures are kept as
    flagged rows.
    """
    if n_cases < 1:
        raise ValueError(f"n_cases must be >= 1, got {n_cases}")
    if bounds is None:
        bounds = ParameterBounds.for_nominal(cfg_template.n_sat_nominal)
    unit = qmc.LatinHypercube(d=5, seed=seed).random(n_cases)
    case_seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(n_cases, dtype=np.uint64)]
    cases = []
    for i in range(n_cases):
        lam = _scale(unit[i, 0], bounds.lambda_sat_per_year)
        tau_lv = _scale(unit[i, 1], bounds.tau_lv_days)
        mu_lv = _scale(unit[i, 2], bounds.mu_lv_days)
        q = _scale_int(unit[i, 3], bounds.q)
        r = _scale_int(unit[i, 4], bounds.r)
        base = dict(
            case_id=i,
            lambda_sat_per_year=lam,
            tau_lv_days=tau_lv,
            mu_lv_days=mu_lv,
            q=q,
            r=r,
            seed=case_seeds[i],
        )
        try:
            cfg = dc_replace(
                cfg_template,
                q=q,
                r=r,
                lambda_sat_per_year=lam,
                tau_lv_days=tau_lv,
                mu_lv_days=mu_lv,
            )
            analytic = analyze(cfg)
            stats = validate(cfg, analytic, horizon_days, n_reps, case_seeds[i])
            cases.append(
                ValidationCase(
                    **base,
                    m_analytic=mean_stock(analytic.pi_rc),
                    s_analytic=expected_shortage(analytic.pi_rc, cfg.n_sat_nominal),
                    stats=stats,
                )
            )
        except Exception as exc:  # noqa: BLE001 - per-case isolation is the contract
            cases.append(ValidationCase(**base, error=str(exc)))
    err_m = [c.stats.rel_err_m for c in cases if c.stats is not None]
    err_s = [c.stats.rel_err_s for c in cases if c.stats is not None]
    return ValidationSuite(
        cases=tuple(cases),
        mean_rel_err_m=float(np.mean(err_m)) if err_m else math.nan,
        p95_rel_err_m=float(np.percentile(err_m, 95)) if err_m else math.nan,
        mean_rel_err_s=float(np.mean(err_s)) if err_s else math.nan,
        p95_rel_err_s=float(np.percentile(err_s, 95)) if err_s else math.nan,
        n_cases=n_cases,
        seed=seed,
        horizon_days=horizon_days,
        n_reps=n_reps,
    )


def _scale(u: float, lo_hi: tuple[float, float]) -> float:
    lo, hi = lo_hi
    return float(lo + u * (hi - lo))


def _scale_int(u: float, lo_hi: tuple[int, int]) -> int:
    lo, hi = lo_hi
    return min(int(lo + math.floor(u * (hi - lo + 1))), hi)
