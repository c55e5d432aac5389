"""Stationary analysis of the (r, q) replenishment cycle.

The cycle alternates between an inter-order (IO) phase, from a delivery
until the next reorder triggers, and a lead-time (LT) phase, from the
reorder until its delivery lands. Within one step the event order is
fixed: delivery first, then failures, then the reorder review. The
pipeline computes the stationary pair (pi_q, pi_r) of conditional
distributions at delivery/reorder instants relating them through

    pi_r = C- P_f (I - C+ P_f)^-1 pi_q
    pi_q = (1 - alpha) P_q P_f^m (I - alpha P_f)^-1 pi_r

and then time-averages over each phase to obtain pi_io, pi_lt, and their
cycle mixture pi_rc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .config import PolicyConfig
from .errors import AnalysisError, StationaryConvergenceError
from .markov import LeadTimeModel, StateDistribution, TransitionMatrices, lead_time_pmf

#: Required L1 residual of the stationary fixed point.
_RESIDUAL_TOL = 1e-10
#: Power-iteration stopping tolerance and iteration cap.
_POWER_TOL = 1e-12
_POWER_MAX_ITER = 1_000_000


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    """Stationary distributions and period lengths for one configuration.

    ``pi_io`` is None only when the inter-order phase has zero expected
    length (``io_degenerate``), which requires a failure rate so extreme
    that every delivery is followed by an immediate reorder with certainty.
    """

    config: PolicyConfig
    pi_q: StateDistribution
    pi_r: StateDistribution
    pi_io: StateDistribution | None
    pi_lt: StateDistribution
    pi_rc: StateDistribution
    k_io: float
    k_lt: float
    tau_io_days: float
    tau_lt_days: float
    tau_rc_days: float
    io_degenerate: bool


def _io_resolvent(mats: TransitionMatrices, vec: np.ndarray) -> np.ndarray:
    """Solve (I - C+ P_f) y = vec, the summed pre-reorder trajectory.

    The system is lower triangular with non-positive off-diagonal entries,
    so forward substitution on non-negative right-hand sides accumulates
    only positive terms: the solve stays componentwise accurate even when
    the diagonal (the per-step failure probabilities) is tiny. The
    diagonal itself comes from the cancellation-free ``stay_complement``.
    """
    size = mats.n_sat + 1
    system = -(mats.c_r_plus @ mats.p_f)
    idx = np.arange(size)
    above_r = idx < size - (mats.r + 1)
    diag = np.where(above_r, mats.stay_complement, 1.0)
    if np.any(diag <= 0.0):
        raise AnalysisError(
            "inter-order period diverges: the failure dynamics never drive "
            "the state to the reorder point (is the failure rate zero?)"
        )
    system[idx, idx] = diag
    y = solve_triangular(system, vec, lower=True)
    if not np.all(np.isfinite(y)):
        raise AnalysisError("inter-order resolvent produced non-finite values")
    return y


def _lt_resolvent(mats: TransitionMatrices, alpha: float, vec: np.ndarray) -> np.ndarray:
    """Solve (I - alpha P_f) y = vec with the same stable triangular scheme."""
    size = mats.n_sat + 1
    system = -(alpha * mats.p_f)
    idx = np.arange(size)
    system[idx, idx] = (1.0 - alpha) + alpha * mats.stay_complement
    return solve_triangular(system, vec, lower=True)


def reorder_distribution(pi_q: StateDistribution, mats: TransitionMatrices) -> StateDistribution:
    """Expected state at the instant a reorder triggers, given pi_q at delivery.

    The map conserves probability mass by construction (the reorder
    eventually fires with certainty), so the result is required to sum to
    one without renormalization.
    """
    y = _io_resolvent(mats, pi_q.probs)
    vec = mats.c_r_minus @ (mats.p_f @ y)
    return StateDistribution(vec, mats.n_sat)


def post_delivery_distribution(
    pi_r: StateDistribution, mats: TransitionMatrices, lead: LeadTimeModel
) -> StateDistribution:
    """Expected state immediately after the q-unit delivery, given pi_r.

    Closed form of the lead-time-weighted failure propagation:
    (1 - alpha) P_q P_f^m (I - alpha P_f)^-1 pi_r.
    """
    z = _lt_resolvent(mats, lead.alpha, pi_r.probs)
    for _ in range(lead.min_steps):
        z = mats.p_f @ z
    vec = (1.0 - lead.alpha) * (mats.p_q @ z)
    return StateDistribution(vec, mats.n_sat)


def _composed_cycle_map(mats: TransitionMatrices, lead: LeadTimeModel) -> np.ndarray:
    """Column-stochastic map sending pi_q to the next cycle's pi_q."""
    size = mats.n_sat + 1
    eye = np.eye(size)
    io_map = mats.c_r_minus @ mats.p_f @ _io_resolvent(mats, eye)
    lt_map = (
        (1.0 - lead.alpha)
        * mats.p_q
        @ np.linalg.matrix_power(mats.p_f, lead.min_steps)
        @ _lt_resolvent(mats, lead.alpha, eye)
    )
    return lt_map @ io_map


def _power_iteration(g: np.ndarray) -> np.ndarray:
    size = g.shape[0]
    v = np.full(size, 1.0 / size)
    for _ in range(_POWER_MAX_ITER):
        w = g @ v
        w /= w.sum()
        if np.abs(w - v).sum() < _POWER_TOL:
            return w
        v = w
    return v


def stationary_pair(
    mats: TransitionMatrices, lead: LeadTimeModel
) -> tuple[StateDistribution, StateDistribution]:
    """Stationary (pi_q, pi_r) pair of the delivery/reorder cycle.

    Solves (G - I) pi = 0 with sum(pi) = 1 for the composed cycle map G by
    a direct linear solve, falling back to power iteration if the system
    is numerically deficient. The returned fixed point satisfies
    ``||G pi - pi||_1 <= 1e-10``.
    """
    g = _composed_cycle_map(mats, lead)
    size = g.shape[0]
    system = g - np.eye(size)
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    vec = None
    try:
        candidate = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        candidate = None
    if candidate is not None and _fixed_point_ok(g, candidate):
        vec = candidate
    if vec is None:
        candidate = _power_iteration(g)
        if _fixed_point_ok(g, candidate):
            vec = candidate
    if vec is None:
        residual = float(np.abs(g @ candidate - candidate).sum())
        raise StationaryConvergenceError(residual, detail="direct solve and power iteration both failed")
    pi_q = StateDistribution(vec, mats.n_sat)
    pi_r = reorder_distribution(pi_q, mats)
    return pi_q, pi_r


def _fixed_point_ok(g: np.ndarray, vec: np.ndarray) -> bool:
    if not np.all(np.isfinite(vec)):
        return False
    if vec.min() < -1e-12 or abs(vec.sum() - 1.0) > 1e-9:
        return False
    return float(np.abs(g @ vec - vec).sum()) <= _RESIDUAL_TOL


def io_distribution(
    pi_q: StateDistribution, mats: TransitionMatrices
) -> tuple[StateDistribution | None, float]:
    """Time-average distribution over the inter-order phase and its length.

    Returns (pi_io, k_io) where k_io is the expected number of IO steps per
    cycle. When k_io is exactly zero (every delivery immediately
    re-triggers a reorder), returns (None, 0.0) so callers can treat the
    phase as empty.
    """
    y = _io_resolvent(mats, pi_q.probs)
    vec = mats.c_r_plus @ (mats.p_f @ y)
    k_io = float(vec.sum())
    if k_io <= 0.0:
        return None, 0.0
    return StateDistribution(vec / k_io, mats.n_sat), k_io


def lt_distribution(
    pi_r: StateDistribution, mats: TransitionMatrices, lead: LeadTimeModel
) -> tuple[StateDistribution, float]:
    """Time-average distribution over the lead-time phase and its length.

    The weights are the survival probabilities of the outstanding order:
    the unnormalized trajectory sum is

        [sum_{i=0}^{m} P_f^i + alpha P_f^(m+1) (I - alpha P_f)^-1] pi_r

    whose total k_lt equals (m + 1) + alpha / (1 - alpha) exactly because
    P_f is column-stochastic.
    """
    acc = pi_r.probs.copy()
    tip = pi_r.probs
    for _ in range(lead.min_steps):
        tip = mats.p_f @ tip
        acc += tip
    geo = _lt_resolvent(mats, lead.alpha, tip)
    vec = acc + lead.alpha * (mats.p_f @ geo)
    k_lt = float(vec.sum())
    return StateDistribution(vec / k_lt, mats.n_sat), k_lt


def cycle_distribution(
    pi_io: StateDistribution | None,
    k_io: float,
    pi_lt: StateDistribution,
    k_lt: float,
) -> StateDistribution:
    """Duration-weighted mixture of the IO and LT phase distributions."""
    if k_io < 0.0:
        raise ValueError(f"k_io must be >= 0, got {k_io}")
    if k_lt <= 0.0:
        raise ValueError(f"k_lt must be > 0, got {k_lt}")
    if k_io == 0.0 or pi_io is None:
        if k_io != 0.0 or pi_io is not None:
            raise ValueError("degenerate IO phase requires both pi_io=None and k_io=0")
        return pi_lt
    vec = (k_io * pi_io.probs + k_lt * pi_lt.probs) / (k_io + k_lt)
    return StateDistribution(vec, pi_lt.n_sat)


def analyze(cfg: PolicyConfig) -> AnalysisResult:
    """Run the full analysis pipeline for one configuration.

    Builds the transition matrices, solves the stationary delivery/reorder
    pair, and assembles the phase and cycle averages. Deterministic:
    identical configurations produce bit-identical results.
    """
    mats = TransitionMatrices.from_config(cfg)
    lead = lead_time_pmf(cfg)
    pi_q, pi_r = stationary_pair(mats, lead)
    pi_io, k_io = io_distribution(pi_q, mats)
    pi_lt, k_lt = lt_distribution(pi_r, mats, lead)
    pi_rc = cycle_distribution(pi_io, k_io, pi_lt, k_lt)
    tau_io = k_io * cfg.tau_mc_days
    tau_lt = k_lt * cfg.tau_mc_days
    return AnalysisResult(
        config=cfg,
        pi_q=pi_q,
        pi_r=pi_r,
        pi_io=pi_io,
        pi_lt=pi_lt,
        pi_rc=pi_rc,
        k_io=k_io,
        k_lt=k_lt,
        tau_io_days=tau_io,
        tau_lt_days=tau_lt,
        tau_rc_days=tau_io + tau_lt,
        io_degenerate=pi_io is None,
    )
