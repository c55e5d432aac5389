"""Probabilistic primitives: failure/lead-time laws and transition matrices.

The per-plane satellite count X in {0, ..., N_sat} is tracked through
column vectors in *descending* state order: index 0 holds P(X = N_sat) and
index N_sat holds P(X = 0). All transition matrices are column-stochastic
and propagate distributions by left multiplication, pi' = P @ pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .config import PolicyConfig
from .errors import ConfigError

#: Negative round-off below this magnitude is clipped to zero on construction.
_NEG_TOL = -1e-12
#: Distributions must carry their declared mass within this tolerance.
_MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StateDistribution:
    """Probability vector over per-plane satellite counts.

    ``probs[i]`` is the probability of state ``n_sat - i`` (descending
    order). ``mass`` is the vector total: 1.0 for a proper distribution,
    anything else for an explicitly weighted vector.
    """

    probs: np.ndarray
    n_sat: int
    mass: float = 1.0

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float).copy()
        if probs.shape != (self.n_sat + 1,):
            raise ValueError(
                f"expected {self.n_sat + 1} entries for n_sat={self.n_sat}, "
                f"got shape {probs.shape}"
            )
        lowest = probs.min() if probs.size else 0.0
        if lowest < _NEG_TOL:
            raise ValueError(f"negative probability {lowest:.3e} exceeds round-off tolerance")
        np.clip(probs, 0.0, None, out=probs)
        total = float(probs.sum())
        if abs(total - self.mass) > _MASS_TOL * max(1.0, abs(self.mass)):
            raise ValueError(
                f"entries sum to {total!r}, expected mass {self.mass!r}"
            )
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def states(self) -> np.ndarray:
        """State labels aligned with ``probs`` (N_sat down to 0)."""
        return np.arange(self.n_sat, -1, -1)

    def prob(self, state: int) -> float:
        """Probability of holding exactly ``state`` satellites."""
        if not 0 <= state <= self.n_sat:
            raise ValueError(f"state {state} outside [0, {self.n_sat}]")
        return float(self.probs[self.n_sat - state])

    @classmethod
    def point_mass(cls, state: int, n_sat: int) -> "StateDistribution":
        probs = np.zeros(n_sat + 1)
        probs[n_sat - state] = 1.0
        return cls(probs, n_sat)

    @classmethod
    def from_weights(cls, weights: np.ndarray, n_sat: int) -> tuple["StateDistribution", float]:
        """Normalize a non-negative weight vector; returns (distribution, total)."""
        weights = np.asarray(weights, dtype=float)
        total = float(weights.sum())
        if total <= 0.0:
            raise ValueError("weight vector has no mass")
        return cls(weights / total, n_sat), total


@dataclass(frozen=True, eq=False)
class TransitionMatrices:
    """Failure, replenishment, and reorder-projection matrices for one policy.

    ``stay_complement[i]`` is 1 - p_f[i, i], the per-step probability of at
    least one failure from the state at index i. It is carried separately
    because the resolvent systems need it to full relative precision, which
    ``1 - exp(-mean)`` evaluated through the matrix cannot provide at small
    failure rates.
    """

    p_f: np.ndarray
    p_q: np.ndarray
    c_r_plus: np.ndarray
    c_r_minus: np.ndarray
    n_sat: int
    r: int
    q: int
    stay_complement: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("p_f", "p_q", "c_r_plus", "c_r_minus"):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.shape != (self.n_sat + 1, self.n_sat + 1):
                raise ValueError(f"{name} must be {self.n_sat + 1} x {self.n_sat + 1}")
            mat = mat.copy()
            mat.flags.writeable = False
            object.__setattr__(self, name, mat)
        if self.stay_complement is None:
            complement = 1.0 - np.diag(self.p_f)
        else:
            complement = np.asarray(self.stay_complement, dtype=float).copy()
            if complement.shape != (self.n_sat + 1,):
                raise ValueError("stay_complement must have one entry per state")
        complement.flags.writeable = False
        object.__setattr__(self, "stay_complement", complement)

    @classmethod
    def from_config(cls, cfg: PolicyConfig) -> "TransitionMatrices":
        c_plus, c_minus = build_projections(cfg.n_sat, cfg.r)
        return cls(
            p_f=build_failure_matrix(cfg),
            p_q=build_replenishment_matrix(cfg.n_sat, cfg.q),
            c_r_plus=c_plus,
            c_r_minus=c_minus,
            n_sat=cfg.n_sat,
            r=cfg.r,
            q=cfg.q,
            stay_complement=failure_stay_complement(
                cfg.n_sat, cfg.n_sat_nominal, cfg.lambda_step
            ),
        )


@dataclass(frozen=True)
class LeadTimeModel:
    """Discretized shifted-exponential lead time.

    A lead time of T = tau_lv + Exp(mu_lv) days maps onto whole steps with
    ``alpha = exp(-tau_mc / mu_lv)`` and ``min_steps = ceil(tau_lv / tau_mc)``.
    Delivery at step k (k >= 1 after the order) has probability

        pmf(k) = alpha^(k - 1 - min_steps) * (1 - alpha)   for k > min_steps,
        pmf(k) = 0                                          otherwise,

    which sums to one over k. The exponent is shifted by ``min_steps`` so
    that the fixed processing delay consumes exactly that many steps before
    the geometric phase begins.
    """

    alpha: float
    min_steps: int

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if type(self.min_steps) is bool or not isinstance(self.min_steps, int) or self.min_steps < 0:
            raise ValueError(f"min_steps must be a non-negative integer, got {self.min_steps!r}")

    def pmf(self, k: int) -> float:
        """Probability that delivery lands at step ``k`` after the order."""
        if k < 1:
            raise ValueError("steps are counted from 1")
        if k <= self.min_steps:
            return 0.0
        return self.alpha ** (k - 1 - self.min_steps) * (1.0 - self.alpha)

    def survival(self, j: int) -> float:
        """Probability the order is still outstanding after ``j`` full steps."""
        if j < 0:
            raise ValueError("j must be >= 0")
        if j <= self.min_steps:
            return 1.0
        return self.alpha ** (j - self.min_steps)

    @property
    def mean_steps(self) -> float:
        """Expected delivery step, (min_steps + 1) + alpha / (1 - alpha)."""
        return (self.min_steps + 1) + self.alpha / (1.0 - self.alpha)


def failure_pmf(n: int, k: int, lambda_step: float, n_nominal: int) -> float:
    """Probability of exactly ``k`` failures in one step from state ``n``.

    Failures are Poisson with mean ``min(n, n_nominal) * lambda_step``:
    only operational satellites fail, and at most ``n_nominal`` of the ``n``
    present are operational (the excess are dormant spares). Counts above
    ``n_nominal`` are impossible and return 0.
    """
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if lambda_step < 0:
        raise ValueError("lambda_step must be non-negative")
    if n_nominal < 1:
        raise ValueError("n_nominal must be >= 1")
    if k > n_nominal:
        return 0.0
    mean = min(n, n_nominal) * lambda_step
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(mean) - mean - math.lgamma(k + 1))


def failure_matrix(n_sat: int, n_nominal: int, lambda_step: float) -> np.ndarray:
    """Column-stochastic one-step failure matrix in descending state order.

    Column j starts from state s = n_sat - j; k failures move it to row
    j + k. The bottom row (state 0) absorbs the residual mass so every
    column sums to one exactly, which also lumps any failure count that
    would overshoot state 0.
    """
    if n_sat < 0:
        raise ValueError("n_sat must be >= 0")
    if n_nominal < 1:
        raise ValueError("n_nominal must be >= 1")
    if lambda_step < 0:
        raise ValueError("lambda_step must be non-negative")
    size = n_sat + 1
    p = np.zeros((size, size))
    p[n_sat, n_sat] = 1.0
    for j in range(n_sat):
        s = n_sat - j
        mean = min(s, n_nominal) * lambda_step
        ks = np.arange(s)
        if mean == 0.0:
            col = np.zeros(s)
            col[0] = 1.0
        else:
            col = np.exp(ks * math.log(mean) - mean - gammaln(ks + 1))
            col[ks > n_nominal] = 0.0
        p[j:j + s, j] = col
        p[n_sat, j] = max(0.0, 1.0 - float(col.sum()))
    return p


def build_failure_matrix(cfg: PolicyConfig) -> np.ndarray:
    """Failure matrix for a validated configuration."""
    return failure_matrix(cfg.n_sat, cfg.n_sat_nominal, cfg.lambda_step)


def failure_stay_complement(n_sat: int, n_nominal: int, lambda_step: float) -> np.ndarray:
    """Per-step probability of at least one failure, by descending index.

    Equals 1 minus the failure matrix diagonal, but evaluated through
    ``expm1`` so it keeps full relative precision when the per-step means
    are tiny.
    """
    states = np.arange(n_sat, -1, -1)
    means = np.minimum(states, n_nominal) * lambda_step
    return -np.expm1(-means)


def lead_time_pmf(cfg: PolicyConfig) -> LeadTimeModel:
    """Discretize the configured lead-time law into a :class:`LeadTimeModel`."""
    alpha = math.exp(-cfg.tau_mc_days / cfg.mu_lv_days)
    ratio = cfg.tau_lv_days / cfg.tau_mc_days
    min_steps = math.ceil(ratio - 1e-9)
    return LeadTimeModel(alpha=alpha, min_steps=min_steps)


def build_projections(n_sat: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal projections splitting a state vector at the reorder point.

    Returns (C_plus, C_minus): C_plus keeps the states above r (the first
    n_sat - r entries), C_minus keeps the states at or below r (the last
    r + 1 entries). They are idempotent and sum to the identity.
    """
    if not 0 <= r <= n_sat:
        raise ConfigError(f"reorder point r={r} outside [0, n_sat={n_sat}]")
    diag = np.zeros(n_sat + 1)
    diag[: n_sat - r] = 1.0
    c_plus = np.diag(diag)
    c_minus = np.eye(n_sat + 1) - c_plus
    return c_plus, c_minus


def build_replenishment_matrix(n_sat: int, q: int) -> np.ndarray:
    """0/1 matrix adding ``q`` satellites to every state that can accept them.

    In descending index order, column j maps to row j - q for j >= q (a
    state gain of q); the first q columns, whose states are within q of the
    maximum, map to themselves. Deliveries only ever occur from states at or
    below the reorder point, so the identity block is never exercised by
    the policy dynamics.
    """
    if not 1 <= q <= n_sat:
        raise ConfigError(f"order size q={q} outside [1, n_sat={n_sat}]")
    size = n_sat + 1
    p = np.zeros((size, size))
    for j in range(size):
        p[j - q if j >= q else j, j] = 1.0
    return p
