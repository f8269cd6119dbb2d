import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapnav.errors import ContractViolation
from gapnav.prediction import SigmaGrowthParams, sigma_schedule
from gapnav.risk import (
    GaussianPrediction,
    RiskParams,
    StaticObstacle,
    cooperative_collision_prob,
    cooperative_factor,
    cooperative_risk_tensor,
    pairwise_collision_prob,
    static_collision_prob,
    static_risk_tensor,
    survival_analysis,
    survival_from_rates,
)

from oracles import collision_prob_by_integral, collision_prob_scalar, erf_series, survival_loop, tau_scalar

S0 = 0.1666


def single(pos, sigma=S0, sigma0=S0):
    return GaussianPrediction(positions=[pos], sigmas=[sigma], sigma0=sigma0, dt=0.25)


def two_step(pos0, pos1, s1, sigma0=S0):
    return GaussianPrediction(positions=[pos0, pos1], sigmas=[sigma0, s1], sigma0=sigma0, dt=0.25)


class TestGaussianPrediction:
    def test_rejects_length_mismatch(self):
        with pytest.raises(ContractViolation):
            GaussianPrediction(positions=[(0, 0), (1, 0)], sigmas=[S0], sigma0=S0, dt=0.25)

    def test_rejects_shrinking_sigma(self):
        with pytest.raises(ContractViolation):
            GaussianPrediction(positions=[(0, 0), (1, 0)], sigmas=[0.3, 0.2], sigma0=0.3, dt=0.25)

    def test_rejects_first_sigma_not_sigma0(self):
        with pytest.raises(ContractViolation):
            GaussianPrediction(positions=[(0, 0)], sigmas=[0.2], sigma0=0.1, dt=0.25)

    def test_rejects_non_positive_sigma(self):
        with pytest.raises(ContractViolation):
            GaussianPrediction(positions=[(0, 0)], sigmas=[0.0], sigma0=0.0, dt=0.25)


class TestPairwise:
    def test_colocated_at_step_zero_is_one(self):
        assert pairwise_collision_prob(single((0, 0)), single((0, 0)), 0) == 1.0

    def test_far_apart_vanishes(self):
        p = pairwise_collision_prob(single((0, 0), 1.0, 1.0), single((100, 0), 1.0, 1.0), 0)
        assert p < 1e-300

    def test_unit_distance_matches_scalar_formula(self):
        p = pairwise_collision_prob(single((0, 0)), single((1, 0)), 0)
        var = 2 * S0 ** 2
        assert p == pytest.approx(math.exp(-1.0 / (2 * var)), rel=1e-12)

    def test_horizon_mismatch_raises(self):
        a = two_step((0, 0), (1, 0), 0.2)
        with pytest.raises(ContractViolation):
            pairwise_collision_prob(a, single((0, 0)), 0)

    def test_step_out_of_range_raises(self):
        with pytest.raises(ContractViolation):
            pairwise_collision_prob(single((0, 0)), single((0, 0)), 1)

    @settings(max_examples=200, deadline=None)
    @given(
        st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
        st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
        st.floats(0.05, 1.0), st.floats(0.0, 2.0), st.floats(0.05, 1.0), st.floats(0.0, 2.0),
    )
    def test_matches_scalar_oracle(self, mu_a, mu_b, s0a, ga, s0b, gb):
        a = two_step((0, 0), mu_a, s0a * (1 + ga), s0a)
        b = two_step((0, 0), mu_b, s0b * (1 + gb), s0b)
        expect = collision_prob_scalar(mu_a, mu_b, s0a * (1 + ga), s0b * (1 + gb), s0a, s0b)
        assert pairwise_collision_prob(a, b, 1) == pytest.approx(min(expect, 1.0), rel=1e-12, abs=1e-300)
        assert pairwise_collision_prob(a, b, 1) == pairwise_collision_prob(b, a, 1)

    def test_monotone_in_distance(self):
        d = np.linspace(0.0, 3.0, 50)
        p = [pairwise_collision_prob(single((0, 0)), single((x, 0)), 0) for x in d]
        assert all(x > y for x, y in zip(p, p[1:]) if y > 0)

    @pytest.mark.parametrize("step", [0, 3, 8])
    def test_head_on_profile_matches_density_integral(self, step):
        params = SigmaGrowthParams()
        n = 12
        sig = sigma_schedule(np.ones(n), params)
        t = np.arange(n) * 0.25
        ego = GaussianPrediction(np.stack([t, 0 * t], 1), sig, params.sigma0, 0.25)
        other = GaussianPrediction(np.stack([2.0 - t, 0 * t], 1), sig, params.sigma0, 0.25)
        got = cooperative_collision_prob(ego, other, step)
        raw = collision_prob_by_integral(ego.positions[step], other.positions[step], sig[step], sig[step],
                                         params.sigma0, params.sigma0)
        expect = raw * tau_scalar(sig[step], sig[step], params.sigma0, params.sigma0)
        assert got == pytest.approx(expect, rel=0.05)


class TestCooperative:
    def test_step_zero_is_one(self):
        a, b = two_step((0, 0), (1, 0), 0.3), two_step((1, 0), (0, 0), 0.3)
        assert cooperative_factor(a, b, 0) == 1.0

    def test_one_sigma_doubled_halves(self):
        a = two_step((0, 0), (0, 0), 2 * S0)
        b = two_step((0, 0), (0, 0), S0)
        assert cooperative_factor(a, b, 1) == pytest.approx(0.5, rel=1e-12)

    def test_both_doubled_quarter(self):
        a = two_step((0, 0), (0, 0), 2 * S0)
        assert cooperative_factor(a, a, 1) == pytest.approx(0.25, rel=1e-12)

    def test_product_of_raw_and_tau(self):
        a = two_step((0, 0), (0.3, 0.1), 0.25)
        b = two_step((1, 0), (0.8, 0.0), 0.2)
        expect = pairwise_collision_prob(a, b, 1) * cooperative_factor(a, b, 1)
        assert cooperative_collision_prob(a, b, 1) == pytest.approx(expect, rel=1e-15)
        assert cooperative_collision_prob(a, b, 1) <= pairwise_collision_prob(a, b, 1)

    def test_tau_one_iff_sigmas_at_initial(self):
        a = two_step((0, 0), (0, 0), S0)
        b = two_step((0, 0), (0, 0), S0 * 1.0001)
        assert cooperative_factor(a, a, 1) == 1.0
        assert cooperative_factor(a, b, 1) < 1.0


class TestStatic:
    seg = StaticObstacle([[[-5.0, 0.0], [5.0, 0.0]]])

    def test_on_segment_is_one(self):
        assert static_collision_prob((1.0, 0.0), 0.2, self.seg) == 1.0

    def test_one_sigma_matches_series_erf(self):
        p = static_collision_prob((0.0, 0.3), 0.3, self.seg)
        assert p == pytest.approx(1.0 - erf_series(1.0 / math.sqrt(2.0)), abs=1e-6)
        assert p == pytest.approx(0.3173, abs=1e-4)

    def test_empty_set_is_zero(self):
        assert static_collision_prob((0.0, 0.0), 0.2, []) == 0.0
        assert static_collision_prob((0.0, 0.0), 0.2, None) == 0.0

    def test_distance_to_segment_end(self):
        p = static_collision_prob((8.0, 4.0), 2.0, self.seg)
        assert p == pytest.approx(1.0 - erf_series(5.0 / (2.0 * math.sqrt(2.0))), abs=1e-9)

    def test_degenerate_segment_rejected(self):
        with pytest.raises(ContractViolation):
            StaticObstacle([[[1.0, 1.0], [1.0, 1.0]]])

    def test_tensor_agrees_with_scalar(self):
        pos = np.array([[[0.0, 0.4], [6.0, 1.0]], [[0.0, -2.0], [-5.5, 0.0]]])
        sig = np.array([[0.2, 0.3], [0.4, 0.5]])
        tensor = static_risk_tensor(pos, sig, [self.seg])
        for idx in np.ndindex(sig.shape):
            assert tensor[idx] == pytest.approx(static_collision_prob(pos[idx], sig[idx], self.seg), rel=1e-12)


class TestSurvival:
    def test_pure_escape_decay(self):
        e = 0.01
        prof = survival_analysis(np.zeros((32, 3)), np.zeros(32), RiskParams(e))
        assert np.allclose(prof.p_surv, np.exp(-e * np.arange(32)), rtol=1e-12, atol=0)

    def test_single_risk(self):
        e, p, j = 0.01, 0.3, 5
        coop = np.zeros((20, 1))
        coop[j, 0] = p
        prof = survival_analysis(coop, np.zeros(20), RiskParams(e))
        i = np.arange(20)
        expect = np.exp(-e * i) * np.where(i > j, math.exp(-p), 1.0)
        assert np.allclose(prof.p_surv, expect, rtol=1e-12, atol=0)

    def test_certain_collision_collapses(self):
        rates = np.ones(20)
        p = survival_from_rates(rates)
        assert p[14] < 1e-6
        assert p[14] == pytest.approx(math.exp(-14), rel=1e-12)

    def test_first_step_is_one(self):
        prof = survival_analysis(np.full((4, 2), 0.5), np.full(4, 0.5), RiskParams())
        assert prof.p_surv[0] == 1.0

    def test_rejects_negative(self):
        with pytest.raises(ContractViolation):
            survival_analysis(np.array([[-0.1]]), np.zeros(1), RiskParams())

    def test_rejects_length_mismatch(self):
        with pytest.raises(ContractViolation):
            survival_analysis(np.zeros((3, 1)), np.zeros(4), RiskParams())

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 3), min_size=1, max_size=40))
    def test_matches_product_loop(self, rates):
        got = survival_from_rates(rates)
        assert np.allclose(got, survival_loop(rates), rtol=1e-12, atol=0)
        assert np.all(np.diff(got) <= 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 30), st.floats(1e-3, 1.0), st.data())
    def test_added_risk_only_affects_later_steps(self, n, p, data):
        j = data.draw(st.integers(0, n - 1))
        coop = np.zeros((n, 1))
        base = survival_analysis(coop, np.zeros(n), RiskParams()).p_surv
        coop[j, 0] = p
        bumped = survival_analysis(coop, np.zeros(n), RiskParams()).p_surv
        assert np.array_equal(bumped[: j + 1], base[: j + 1])
        assert np.all(bumped[j + 1:] < base[j + 1:])

    def test_invalid_escape(self):
        with pytest.raises(ContractViolation):
            RiskParams(0.0)
        with pytest.raises(ContractViolation):
            RiskParams(1.0)


def test_tensor_matches_scalar_functions():
    rng = np.random.default_rng(4)
    params = SigmaGrowthParams()
    n = 6
    ego_sig = sigma_schedule(rng.uniform(0, 1, (3, n)), params)
    other_sig = sigma_schedule(rng.uniform(0, 1, (2, n)), params)
    ego_pos = rng.normal(0, 1, (3, n, 2))
    other_pos = rng.normal(0, 1, (2, n, 2))
    tensor, _ = cooperative_risk_tensor(ego_pos, ego_sig, params.sigma0, other_pos, other_sig,
                                        np.full(2, params.sigma0))
    for c in range(3):
        for k in range(2):
            a = GaussianPrediction(ego_pos[c], ego_sig[c], params.sigma0, 0.25)
            b = GaussianPrediction(other_pos[k], other_sig[k], params.sigma0, 0.25)
            for i in range(n):
                assert tensor[c, k, i] == pytest.approx(cooperative_collision_prob(a, b, i), rel=1e-12)
