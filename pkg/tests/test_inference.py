import json
import math

import numpy as np
import pytest

from twodsys import gp, inference
from twodsys.errors import ConfigurationError, NumericalFailureError
from twodsys.gp import TimeSeries
from twodsys.inference import OddsResult, PriorSpec


def simulated(s, seed, n=200, step=0.25, p=0.0):
    t = np.arange(n) * step
    return TimeSeries(t, gp.sample((0.0, s, 0.0, p), t, seed=seed)[0])


@pytest.fixture(scope="module")
def osc_data():
    return simulated(2.0, seed=100, n=80)


class TestPriorSpec:
    def test_invalid_ranges(self):
        with pytest.raises(ConfigurationError):
            PriorSpec(h_range=(1, 1))
        with pytest.raises(ConfigurationError):
            PriorSpec(h_range=(0, 1), s_range=(0, math.inf))
        with pytest.raises(ConfigurationError):
            PriorSpec(h_range=(0, 1), j_prior="beta")

    def test_mass_oscillatory(self):
        assert PriorSpec((0, 1), s_range=(-3, 1)).mass_oscillatory == pytest.approx(0.25)

    def test_json_round_trip(self, tmp_path):
        prior = PriorSpec((-1, 2), (-3, 3), (0, 1), "tilted", mean_prior=0.5, noise_prior=(0, 0.1))
        path = tmp_path / "prior.json"
        path.write_text(json.dumps(prior.to_dict()))
        assert PriorSpec.from_json(path) == prior


class TestPriorSample:
    def test_tilted_mean(self):
        draws = inference.prior_sample(PriorSpec((0, 1), j_prior="tilted"), 0, 1_000_000)
        j = draws["j"]
        assert abs(j.mean() - 1 / 3) < 3 * j.std() / math.sqrt(j.size)
        assert j.min() >= -1 and j.max() <= 1

    def test_symmetric_s(self):
        draws = inference.prior_sample(PriorSpec((0, 1), s_range=(-3, 3)), 1, 100_000)
        frac = np.mean(draws["s"] > 0)
        assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / 100_000)

    def test_deterministic(self):
        prior = PriorSpec((0, 1))
        a = inference.prior_sample(prior, 4, 100)
        b = inference.prior_sample(prior, 4, 100)
        for key in a:
            np.testing.assert_array_equal(a[key], b[key])

    def test_p_consistent_with_j(self):
        draws = inference.prior_sample(PriorSpec((0, 1)), 2, 1000)
        np.testing.assert_allclose(np.sin(np.pi * draws["p"] / 2), draws["j"], atol=1e-14)


class TestOddsResult:
    @pytest.mark.parametrize("lo", [-800.0, -3.0, 0.0, 2.5, 800.0])
    def test_probability_consistent(self, lo):
        r = OddsResult.from_log_odds(lo, 0.1, 1000)
        if abs(lo) < 700:
            assert r.p_oscillatory == pytest.approx(r.odds / (1 + r.odds), abs=1e-12)
        assert 0 <= r.p_oscillatory <= 1

    @pytest.mark.parametrize("odds,label", [(25, "oscillatory"), (0.04, "overdamped"), (2, "undecided")])
    def test_labels(self, odds, label):
        assert inference.label_for_odds(math.log(odds), 10) == label


class TestPosteriorOdds:
    def test_single_point_reflects_prior_mass(self):
        data = TimeSeries([0.0], [0.7])
        for s_range, expected in (((-4, 4), 0.0), ((-2, 6), math.log(3))):
            prior = PriorSpec((-1, 1), s_range=s_range, k_range=(-1, 1))
            res = inference.posterior_odds(data, prior, budget=20000, seed=0)
            assert res.log_odds == pytest.approx(expected, abs=4 * res.stderr + 1e-9)

    def test_deterministic(self, osc_data):
        a = inference.posterior_odds(osc_data, budget=2000, seed=3)
        b = inference.posterior_odds(osc_data, budget=2000, seed=3)
        assert a == b

    def test_high_q_data(self, osc_data):
        res = inference.posterior_odds(osc_data, budget=5000, seed=0)
        assert res.p_oscillatory > 0.9

    def test_time_scale_equivariance(self, osc_data):
        prior = inference.default_prior(osc_data)
        lam = 7.5
        scaled = TimeSeries(lam * osc_data.times, osc_data.values)
        prior2 = PriorSpec((prior.h_range[0] - math.log(lam), prior.h_range[1] - math.log(lam)),
                           prior.s_range, prior.k_range)
        a = inference.posterior_odds(osc_data, prior, budget=2000, seed=1)
        b = inference.posterior_odds(scaled, prior2, budget=2000, seed=1)
        assert b.log_odds == pytest.approx(a.log_odds, abs=max(1e-6, 0.1 * a.stderr))

    def test_value_scale_equivariance(self, osc_data):
        prior = inference.default_prior(osc_data)
        lam = 0.02
        scaled = TimeSeries(osc_data.times, lam * osc_data.values)
        prior2 = PriorSpec(prior.h_range, prior.s_range,
                           (prior.k_range[0] + math.log(lam), prior.k_range[1] + math.log(lam)))
        a = inference.posterior_odds(osc_data, prior, budget=2000, seed=1)
        b = inference.posterior_odds(scaled, prior2, budget=2000, seed=1)
        assert b.log_odds == pytest.approx(a.log_odds, abs=max(1e-6, 0.1 * a.stderr))

    def test_stderr_shrinks_with_budget(self):
        data = simulated(0.0, seed=7, n=40, step=0.5)
        prior = inference.default_prior(data)
        ratios = []
        for seed in range(4):
            small = inference.posterior_odds(data, prior, budget=2000, seed=seed).stderr
            large = inference.posterior_odds(data, prior, budget=32000, seed=seed).stderr
            ratios.append(small / large)
        # 1/sqrt(budget) predicts a ratio of 4
        assert 2.5 < np.exp(np.mean(np.log(ratios))) < 6.5

    def test_tilted_and_uniform_agree(self):
        data = simulated(3.0, seed=12, n=120, step=0.25, p=0.5)
        prior_u = inference.default_prior(data, "uniform")
        prior_t = inference.default_prior(data, "tilted")
        a = inference.posterior_odds(data, prior_u, budget=20000, seed=0)
        b = inference.posterior_odds(data, prior_t, budget=20000, seed=1)
        if math.isinf(a.log_odds) or math.isinf(b.log_odds):
            assert a.log_odds == b.log_odds
        else:
            assert abs(a.log_odds - b.log_odds) < 3 * math.hypot(a.stderr, b.stderr)

    def test_grid_agrees_with_monte_carlo(self):
        data = simulated(1.0, seed=2, n=12, step=0.5)
        prior = PriorSpec((-1.0, 1.0), (-3, 3), (-0.5, 0.5))
        mc = inference.posterior_odds(data, prior, budget=40000, seed=0)
        grid = inference.grid_odds(data, prior, resolution=16)
        assert math.isnan(grid.stderr)
        assert abs(mc.log_odds - grid.log_odds) < 4 * mc.stderr + 0.05

    def test_budget_too_small(self, osc_data):
        with pytest.raises(ConfigurationError):
            inference.posterior_odds(osc_data, budget=999)

    def test_underflow_reported(self, osc_data):
        # absurdly small amplitude makes every likelihood -inf
        prior = PriorSpec((0, 1), k_range=(-400, -399))
        with pytest.raises(NumericalFailureError):
            inference.posterior_odds(osc_data, prior, budget=1000)


class TestClassify:
    def test_threshold_validated(self, osc_data):
        with pytest.raises(ConfigurationError):
            inference.classify(osc_data, threshold_odds=1.0)

    def test_oscillatory_label(self, osc_data):
        res = inference.classify(osc_data, budget=5000, seed=0)
        assert res.label == "oscillatory"
        assert res.odds.p_oscillatory > 0.9
