import dataclasses
import math

import numpy as np
import pytest

from spareops import (
    AnalysisError,
    LeadTimeModel,
    StateDistribution,
    analyze,
    cycle_distribution,
    io_distribution,
    lead_time_pmf,
    lt_distribution,
    post_delivery_distribution,
    reorder_distribution,
    stationary_pair,
)
from spareops.markov import TransitionMatrices

from helpers import config_with_step_rate, make_config, random_config, random_distribution, raw_matrices


def series_reorder(pi_q: np.ndarray, mats, tol=1e-14, max_terms=100_000):
    """Oracle for the delivery-to-reorder map: explicit event-by-event sum."""
    kernel = mats.c_r_plus @ mats.p_f
    absorb = mats.c_r_minus @ mats.p_f
    term = pi_q.copy()
    acc = np.zeros_like(term)
    for _ in range(max_terms):
        acc += absorb @ term
        term = kernel @ term
        if term.sum() < tol:
            break
    return acc


def series_post_delivery(pi_r: np.ndarray, mats, alpha, m, n_terms):
    """Oracle for the reorder-to-delivery map: lead-time-weighted sum."""
    acc = np.zeros_like(pi_r)
    term = pi_r.copy()
    for j in range(n_terms):
        if j >= m:
            acc += alpha ** (j - m) * (1 - alpha) * term
        term = mats.p_f @ term
    return mats.p_q @ acc


def series_lt(pi_r: np.ndarray, mats, alpha, m, n_terms):
    """Oracle for the lead-time average: survival-weighted trajectory sum."""
    acc = np.zeros_like(pi_r)
    term = pi_r.copy()
    for j in range(n_terms):
        weight = 1.0 if j <= m else alpha ** (j - m)
        acc += weight * term
        term = mats.p_f @ term
    return acc


def exact_cycle_marginal(cfg):
    """Ground-truth stationary marginal from the extended chain (X, phase).

    Phases: 0 = no order outstanding; 1..m = forced waiting steps of the
    processing delay; m+1 = geometric arrival phase with hazard 1 - alpha.
    Step order inside a phase transition matches the model: delivery (if
    any), then failure, then the reorder review.
    """
    from spareops.markov import build_failure_matrix

    lead = lead_time_pmf(cfg)
    alpha, m = lead.alpha, lead.min_steps
    n_sat, r, q = cfg.n_sat, cfg.r, cfg.q
    size = n_sat + 1
    pf = build_failure_matrix(cfg)
    n_phase = m + 2

    def eidx(state, phase):
        return phase * size + (n_sat - state)

    t = np.zeros((size * n_phase, size * n_phase))
    for x in range(size):
        for ph in range(n_phase):
            col = eidx(x, ph)
            if ph == 0:
                for xp in range(x + 1):
                    p = pf[n_sat - xp, n_sat - x]
                    if p:
                        t[eidx(xp, 1 if xp <= r else 0), col] += p
            elif ph <= m:
                nxt = ph + 1 if ph < m else m + 1
                for xp in range(x + 1):
                    p = pf[n_sat - xp, n_sat - x]
                    if p:
                        t[eidx(xp, nxt), col] += p
            else:
                for xp in range(x + 1):
                    p = pf[n_sat - xp, n_sat - x]
                    if p:
                        t[eidx(xp, m + 1), col] += alpha * p
                y = min(x + q, n_sat)  # cap only guards unreachable columns
                for xp in range(y + 1):
                    p = pf[n_sat - xp, n_sat - y]
                    if p:
                        t[eidx(xp, 1 if xp <= r else 0), col] += (1 - alpha) * p
    assert np.allclose(t.sum(axis=0), 1.0, atol=1e-12)
    w, v = np.linalg.eig(t)
    vec = np.real(v[:, np.argmin(np.abs(w - 1.0))])
    vec /= vec.sum()
    return vec.reshape(n_phase, size).sum(axis=0)


class TestReorderDistribution:
    def test_two_state_hand_solution(self):
        mats = raw_matrices(n_sat=1, n_nominal=1, lambda_step=0.1, r=0, q=1)
        pi_q = StateDistribution.point_mass(1, 1)
        pi_r = reorder_distribution(pi_q, mats)
        np.testing.assert_allclose(pi_r.probs, [0.0, 1.0], atol=1e-14)

    @pytest.mark.parametrize("seed", range(8))
    def test_mass_conserved_without_renormalization(self, seed):
        rng = np.random.default_rng(100 + seed)
        cfg = random_config(rng)
        mats = TransitionMatrices.from_config(cfg)
        pi = StateDistribution(random_distribution(rng, cfg.n_sat), cfg.n_sat)
        pi_r = reorder_distribution(pi, mats)
        assert abs(pi_r.probs.sum() - 1.0) <= 1e-9

    def test_support_confined_at_or_below_reorder_point(self):
        rng = np.random.default_rng(5)
        cfg = random_config(rng)
        mats = TransitionMatrices.from_config(cfg)
        pi = StateDistribution(random_distribution(rng, cfg.n_sat), cfg.n_sat)
        pi_r = reorder_distribution(pi, mats)
        above_r = pi_r.probs[: cfg.n_sat - cfg.r]
        np.testing.assert_array_equal(above_r, 0.0)

    def test_matches_event_series_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            cfg = random_config(rng, max_n_sat=20)
            mats = TransitionMatrices.from_config(cfg)
            pi = StateDistribution(random_distribution(rng, cfg.n_sat), cfg.n_sat)
            expected = series_reorder(pi.probs, mats)
            got = reorder_distribution(pi, mats)
            assert np.abs(got.probs - expected).sum() < 1e-10

    def test_one_failure_step_dominates_near_full_reorder_point(self):
        # r = n_sat - 1 with a high step rate: nearly every cycle reorders
        # on the very first failure step
        cfg = config_with_step_rate(0.5, q=1, r=7)
        mats = TransitionMatrices.from_config(cfg)
        pi_q = StateDistribution.point_mass(cfg.n_sat, cfg.n_sat)
        partial = np.zeros(cfg.n_sat + 1)
        kernel = mats.c_r_plus @ mats.p_f
        term = pi_q.probs.copy()
        for _ in range(50):
            partial += mats.c_r_minus @ mats.p_f @ term
            term = kernel @ term
        got = reorder_distribution(pi_q, mats)
        assert np.abs(got.probs - partial).sum() < 1e-10
        first_step = mats.c_r_minus @ mats.p_f @ pi_q.probs
        assert np.abs(got.probs - first_step).sum() < 0.05

    def test_zero_failure_rate_raises(self):
        mats = raw_matrices(n_sat=3, n_nominal=2, lambda_step=0.0, r=1, q=2)
        pi = StateDistribution.point_mass(3, 3)
        with pytest.raises(AnalysisError):
            reorder_distribution(pi, mats)


class TestPostDeliveryDistribution:
    def test_negligible_failures_reduce_to_pure_shift(self):
        cfg = config_with_step_rate(1e-13, q=2, r=3)
        mats = TransitionMatrices.from_config(cfg)
        lead = lead_time_pmf(cfg)
        pi_r = StateDistribution(np.array([0.0, 0.0, 0.3, 0.3, 0.2, 0.2]), 5)
        got = post_delivery_distribution(pi_r, mats, lead)
        np.testing.assert_allclose(got.probs, mats.p_q @ pi_r.probs, atol=1e-9)

    def test_instant_delivery_degenerates_to_shift(self):
        mats = raw_matrices(n_sat=5, n_nominal=3, lambda_step=0.05, r=3, q=2)
        lead = LeadTimeModel(alpha=1e-12, min_steps=0)
        pi_r = StateDistribution(np.array([0.0, 0.0, 0.4, 0.3, 0.2, 0.1]), 5)
        got = post_delivery_distribution(pi_r, mats, lead)
        np.testing.assert_allclose(got.probs, mats.p_q @ pi_r.probs, atol=1e-10)

    def test_matches_truncated_series(self):
        mats = raw_matrices(n_sat=3, n_nominal=3, lambda_step=0.05, r=2, q=1)
        lead = LeadTimeModel(alpha=0.6, min_steps=2)
        rng = np.random.default_rng(7)
        pi_r = StateDistribution(random_distribution(rng, 3), 3)
        expected = series_post_delivery(pi_r.probs, mats, 0.6, 2, n_terms=200)
        got = post_delivery_distribution(pi_r, mats, lead)
        assert np.abs(got.probs - expected).sum() < 1e-10

    def test_output_excludes_states_below_order_size(self):
        rng = np.random.default_rng(21)
        cfg = random_config(rng)
        mats = TransitionMatrices.from_config(cfg)
        lead = lead_time_pmf(cfg)
        pi_q, pi_r = stationary_pair(mats, lead)
        if cfg.q >= 1:
            trailing = pi_q.probs[cfg.n_sat - cfg.q + 1 :]
            np.testing.assert_array_equal(trailing, 0.0)


class TestStationaryPair:
    def test_two_state_chain(self):
        mats = raw_matrices(n_sat=1, n_nominal=1, lambda_step=0.1, r=0, q=1)
        lead = LeadTimeModel(alpha=0.5, min_steps=2)
        pi_q, pi_r = stationary_pair(mats, lead)
        np.testing.assert_allclose(pi_q.probs, [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(pi_r.probs, [0.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_fixed_point_property(self, seed):
        rng = np.random.default_rng(300 + seed)
        cfg = random_config(rng)
        mats = TransitionMatrices.from_config(cfg)
        lead = lead_time_pmf(cfg)
        pi_q, pi_r = stationary_pair(mats, lead)
        roundtrip = post_delivery_distribution(pi_r, mats, lead)
        assert np.abs(roundtrip.probs - pi_q.probs).sum() <= 1e-10

    def test_baseline_cycle_duration(self, baseline):
        result = analyze(baseline)
        assert result.tau_rc_days == pytest.approx(365.5, rel=0.01)


class TestIoDistribution:
    def test_geometric_sojourn_length(self):
        mats = raw_matrices(n_sat=1, n_nominal=1, lambda_step=0.1, r=0, q=1)
        pi_q = StateDistribution.point_mass(1, 1)
        pi_io, k_io = io_distribution(pi_q, mats)
        stay = math.exp(-0.1)
        assert k_io == pytest.approx(stay / (1.0 - stay), rel=1e-12)
        np.testing.assert_allclose(pi_io.probs, [1.0, 0.0], atol=1e-14)

    def test_support_strictly_above_reorder_point(self):
        rng = np.random.default_rng(17)
        cfg = random_config(rng)
        mats = TransitionMatrices.from_config(cfg)
        lead = lead_time_pmf(cfg)
        pi_q, _ = stationary_pair(mats, lead)
        pi_io, k_io = io_distribution(pi_q, mats)
        assert k_io > 0
        np.testing.assert_array_equal(pi_io.probs[cfg.n_sat - cfg.r :], 0.0)

    def test_vanishing_rate_gives_long_finite_cycle(self):
        cfg = config_with_step_rate(1e-9, q=1, r=3)
        mats = TransitionMatrices.from_config(cfg)
        pi_q = StateDistribution.point_mass(cfg.n_sat, cfg.n_sat)
        _, k_io = io_distribution(pi_q, mats)
        assert k_io > 1e8
        assert math.isfinite(k_io)

    def test_underflow_rate_flags_degenerate_io(self):
        # per-step failure mean so large that surviving above r is impossible
        # in double precision: every delivery immediately re-triggers
        cfg = config_with_step_rate(900.0, q=1, r=1, n_sat_nominal=1)
        result = analyze(cfg)
        assert result.io_degenerate
        assert result.k_io == 0.0
        assert result.pi_io is None
        np.testing.assert_array_equal(result.pi_rc.probs, result.pi_lt.probs)


class TestLtDistribution:
    def test_expected_length_closed_form(self):
        cfg = make_config(tau_mc_days=0.5, mu_lv_days=10.0, tau_lv_days=10.0)
        mats = TransitionMatrices.from_config(cfg)
        lead = lead_time_pmf(cfg)
        pi_r = StateDistribution.point_mass(cfg.r, cfg.n_sat)
        _, k_lt = lt_distribution(pi_r, mats, lead)
        alpha = math.exp(-0.05)
        assert lead.min_steps == 20
        assert k_lt == pytest.approx(21 + alpha / (1 - alpha), abs=1e-9)
        assert k_lt * cfg.tau_mc_days == pytest.approx(20.25, abs=0.01)

    def test_state_frozen_when_failures_negligible(self):
        cfg = config_with_step_rate(1e-13, q=2, r=2, tau_lv_days=0.0)
        mats = TransitionMatrices.from_config(cfg)
        lead = lead_time_pmf(cfg)
        pi_r = StateDistribution(np.array([0.0, 0.0, 0.5, 0.3, 0.2]), 4)
        pi_lt, _ = lt_distribution(pi_r, mats, lead)
        np.testing.assert_allclose(pi_lt.probs, pi_r.probs, atol=1e-9)

    def test_matches_truncated_series(self):
        rng = np.random.default_rng(23)
        mats = raw_matrices(n_sat=4, n_nominal=4, lambda_step=0.08, r=3, q=1)
        lead = LeadTimeModel(alpha=0.55, min_steps=3)
        pi_r = StateDistribution(random_distribution(rng, 4), 4)
        expected = series_lt(pi_r.probs, mats, 0.55, 3, n_terms=500)
        got, k_lt = lt_distribution(pi_r, mats, lead)
        assert np.abs(got.probs * k_lt - expected).sum() < 1e-10
        assert k_lt == pytest.approx(expected.sum(), abs=1e-10)

    def test_length_identity_across_random_configs(self):
        rng = np.random.default_rng(29)
        for _ in range(10):
            cfg = random_config(rng)
            mats = TransitionMatrices.from_config(cfg)
            lead = lead_time_pmf(cfg)
            pi_r = StateDistribution(random_distribution(rng, cfg.n_sat), cfg.n_sat)
            _, k_lt = lt_distribution(pi_r, mats, lead)
            assert abs(k_lt - lead.mean_steps) <= 1e-9


class TestCycleDistribution:
    def test_degenerate_io_returns_lt(self):
        pi_lt = StateDistribution(np.array([0.25, 0.75]), 1)
        assert cycle_distribution(None, 0.0, pi_lt, 4.0) is pi_lt

    def test_equal_weight_mixture(self):
        pi_io = StateDistribution(np.array([1.0, 0.0]), 1)
        pi_lt = StateDistribution(np.array([0.0, 1.0]), 1)
        mixed = cycle_distribution(pi_io, 3.0, pi_lt, 3.0)
        np.testing.assert_allclose(mixed.probs, [0.5, 0.5])

    def test_inconsistent_degenerate_arguments_rejected(self):
        pi = StateDistribution(np.array([0.5, 0.5]), 1)
        with pytest.raises(ValueError):
            cycle_distribution(None, 2.0, pi, 3.0)
        with pytest.raises(ValueError):
            cycle_distribution(pi, 0.0, pi, 3.0)

    def test_baseline_mass_concentrates_near_the_top(self, baseline):
        result = analyze(baseline)
        in_band = sum(result.pi_rc.prob(s) for s in range(37, 42))
        assert in_band >= 0.99


class TestAnalyze:
    def test_deterministic_and_normalized(self, baseline):
        a = analyze(baseline)
        b = analyze(baseline)
        for name in ("pi_q", "pi_r", "pi_io", "pi_lt", "pi_rc"):
            da, db = getattr(a, name), getattr(b, name)
            np.testing.assert_array_equal(da.probs, db.probs)
            assert abs(da.probs.sum() - 1.0) <= 1e-9
        assert a.tau_rc_days == b.tau_rc_days

    def test_periods_add_exactly(self, baseline):
        result = analyze(baseline)
        assert result.tau_rc_days == result.tau_io_days + result.tau_lt_days
        assert result.tau_io_days == result.k_io * baseline.tau_mc_days
        assert result.tau_lt_days == result.k_lt * baseline.tau_mc_days

    def test_result_carries_its_config(self, baseline):
        assert analyze(baseline).config == baseline

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(q=2, r=3, n_sat_nominal=4, lambda_step=0.05, alpha_mu=1.0, tau_lv_days=1.0),
            dict(q=1, r=4, n_sat_nominal=3, lambda_step=0.12, alpha_mu=2.0, tau_lv_days=0.0),
            dict(q=3, r=2, n_sat_nominal=5, lambda_step=0.02, alpha_mu=4.0, tau_lv_days=2.0),
        ],
    )
    def test_cycle_average_matches_exact_extended_chain(self, kwargs):
        cfg = config_with_step_rate(
            kwargs["lambda_step"],
            q=kwargs["q"],
            r=kwargs["r"],
            n_sat_nominal=kwargs["n_sat_nominal"],
            tau_mc_days=0.5,
            mu_lv_days=kwargs["alpha_mu"],
            tau_lv_days=kwargs["tau_lv_days"],
        )
        expected = exact_cycle_marginal(cfg)
        result = analyze(cfg)
        assert np.abs(result.pi_rc.probs - expected).sum() < 1e-12

    def test_immutable_result(self, baseline):
        result = analyze(baseline)
        with pytest.raises(dataclasses.FrozenInstanceError):
            result.k_io = 0.0
