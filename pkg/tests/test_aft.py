import math

import numpy as np
import pytest

from cardiorisk.errors import ConfigurationError, DataError
from cardiorisk.metrics import antolini_cindex, km_estimator
from cardiorisk.survival import (
    AftConfig,
    BoostedAftModel,
    TimeGrid,
    aft_nll,
    aft_survival_curve,
    train_boosted_aft,
)
from cardiorisk.survival.normalize import QuantileNormalizer


def loglogistic_cohort(seed, n=2000, sigma=0.5, censor_q=0.8):
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, 2.0, size=(n, 2))
    tau = 2.0 * X[:, 0] - X[:, 1]
    t = np.exp(tau + sigma * rng.logistic(0.0, 1.0, size=n))
    c = np.exp(np.quantile(np.log(t), censor_q) + 0.5 * rng.logistic(0.0, 1.0, size=n))
    y = np.maximum(np.minimum(t, c), 1e-3)
    return X, y, (t <= c).astype(int), tau


class TestAftNll:
    def test_uncensored_plugin_value(self):
        # z = 0 so the logistic density is 1/4 and the time density 1/(4y)
        for y in (1.0, 3.7):
            loss, _, _ = aft_nll(math.log(y), y, 1, 1.0)
            assert float(loss) == pytest.approx(-math.log(1.0 / (4.0 * y)), rel=1e-12)

    def test_censored_loss_vanishes_for_large_tau(self):
        loss, _, _ = aft_nll(50.0, 2.0, 0, 1.0)
        assert float(loss) < 1e-9

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(100):
            tau = rng.normal(0, 2)
            y = rng.uniform(0.1, 20.0)
            delta = int(rng.integers(0, 2))
            sigma = rng.uniform(0.3, 2.0)
            h = 1e-6 * max(abs(tau), 1.0)
            lp, _, _ = aft_nll(tau + h, y, delta, sigma)
            lm, _, _ = aft_nll(tau - h, y, delta, sigma)
            _, g, _ = aft_nll(tau, y, delta, sigma)
            numeric = (float(lp) - float(lm)) / (2 * h)
            worst = max(worst, abs(float(g) - numeric) / max(abs(numeric), 1e-8))
        assert worst < 1e-6

    def test_hessian_matches_gradient_differences(self):
        # z is drawn directly so the check stays inside the range where
        # double precision can resolve a 1e-6 relative comparison.
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(100):
            y = rng.uniform(0.1, 20.0)
            sigma = rng.uniform(0.3, 2.0)
            z = rng.uniform(-6.0, 6.0)
            tau = math.log(y) - sigma * z
            delta = int(rng.integers(0, 2))
            h = 1e-6 * max(abs(tau), 1.0)
            _, gp, _ = aft_nll(tau + h, y, delta, sigma)
            _, gm, _ = aft_nll(tau - h, y, delta, sigma)
            _, _, hess = aft_nll(tau, y, delta, sigma)
            numeric = (float(gp) - float(gm)) / (2 * h)
            worst = max(worst, abs(float(hess) - numeric) / abs(numeric))
        assert worst < 1e-6

    def test_scale_equivariance(self):
        # Multiplying times by c and shifting tau by ln c leaves z unchanged:
        # gradients and hessians are identical, the censored loss is identical
        # and the uncensored loss picks up exactly the ln(c) Jacobian offset.
        rng = np.random.default_rng(2)
        for _ in range(50):
            tau = rng.normal(0, 1)
            y = rng.uniform(0.2, 10.0)
            sigma = rng.uniform(0.4, 1.5)
            c = rng.uniform(0.1, 10.0)
            for delta in (0, 1):
                l0, g0, h0 = aft_nll(tau, y, delta, sigma)
                l1, g1, h1 = aft_nll(tau + math.log(c), y * c, delta, sigma)
                assert float(g1) == pytest.approx(float(g0), rel=1e-9, abs=1e-12)
                assert float(h1) == pytest.approx(float(h0), rel=1e-9, abs=1e-12)
                offset = math.log(c) if delta == 1 else 0.0
                assert float(l1) == pytest.approx(float(l0) + offset, rel=1e-9)

    def test_nonpositive_time_rejected(self):
        with pytest.raises(DataError):
            aft_nll(0.0, -1.0, 1, 1.0)
        with pytest.raises(ConfigurationError):
            aft_nll(0.0, 1.0, 1, 0.0)


class TestAftSurvivalCurve:
    def test_median_at_exp_tau(self):
        grid = TimeGrid(horizon=4.0, n_bins=8)  # 2.0 = exp(tau) lies on the grid
        tau = math.log(2.0)
        curve = aft_survival_curve(tau, 0.7, grid)
        assert curve.at(2.0) == pytest.approx(0.5, abs=1e-9)

    def test_survival_starts_near_one(self):
        curve = aft_survival_curve(1.0, 0.5, TimeGrid(horizon=11.0, n_bins=25))
        assert curve.at(1e-6) == pytest.approx(1.0, abs=1e-3)

    def test_direct_evaluation(self):
        grid = TimeGrid(horizon=4.0, n_bins=4)  # times 1, 2, 3, 4
        curve = aft_survival_curve(0.0, 0.5, grid)
        assert curve.at(2.0) == pytest.approx(1.0 / (1.0 + 2.0**2), rel=1e-9)


class TestTrainBoostedAft:
    def test_zero_trees_predicts_base_score(self):
        X, y, delta, _ = loglogistic_cohort(3, n=50)
        model = train_boosted_aft(X, y, delta, AftConfig(trees=0))
        tau = model.predict_tau(X)
        assert np.allclose(tau, np.mean(np.log(y)))

    def test_all_censored_refused(self):
        X, y, _, _ = loglogistic_cohort(4, n=50)
        with pytest.raises(DataError):
            train_boosted_aft(X, y, np.zeros(50, dtype=int), AftConfig(trees=5))

    def test_learns_planted_structure(self):
        X, y, delta, _ = loglogistic_cohort(5, n=1200)
        split = 900
        grid = TimeGrid(horizon=float(np.quantile(y, 0.99)), n_bins=25)
        norm = QuantileNormalizer().fit({"a": X[:split, 0], "b": X[:split, 1]})
        model = train_boosted_aft(
            norm.apply_matrix(X[:split]), y[:split], delta[:split],
            AftConfig(sigma=0.5, trees=150, depth=3, learning_rate=0.1), grid,
        )
        curves = model.predict_survival(norm.apply_matrix(X[split:]))
        assert antolini_cindex(curves, y[split:], delta[split:]) >= 0.88

    def test_constant_feature_matches_kaplan_meier(self):
        rng = np.random.default_rng(6)
        n = 400
        X = np.ones((n, 1))
        t = np.exp(1.0 + 0.6 * rng.logistic(0, 1, n))
        c = np.exp(1.6 + 0.6 * rng.logistic(0, 1, n))
        y = np.maximum(np.minimum(t, c), 1e-3)
        delta = (t <= c).astype(int)
        grid = TimeGrid(horizon=float(np.quantile(y, 0.99)), n_bins=25)
        model = train_boosted_aft(X, y, delta, AftConfig(sigma=0.6, trees=40, depth=2), grid)
        km = km_estimator(y, delta)
        t_med = float(np.median(y))
        [curve] = model.predict_survival(np.ones((1, 1)))
        assert float(curve.at(t_med)) == pytest.approx(float(km.at(np.asarray([t_med]))[0]), abs=0.1)

    def test_sample_order_invariance(self):
        X, y, delta, _ = loglogistic_cohort(7, n=300)
        config = AftConfig(sigma=0.5, trees=30, depth=3)
        model_a = train_boosted_aft(X, y, delta, config)
        perm = np.random.default_rng(0).permutation(y.size)
        model_b = train_boosted_aft(X[perm], y[perm], delta[perm], config)
        probe = np.random.default_rng(1).normal(0, 2, size=(50, 2))
        assert np.array_equal(model_a.predict_tau(probe), model_b.predict_tau(probe))

    def test_missing_values_routed(self):
        X, y, delta, _ = loglogistic_cohort(8, n=400)
        X = X.copy()
        X[::7, 0] = np.nan
        model = train_boosted_aft(X, y, delta, AftConfig(sigma=0.5, trees=30, depth=3))
        probe = X[:20]
        assert np.all(np.isfinite(model.predict_tau(probe)))

    def test_persistence_round_trip(self):
        X, y, delta, _ = loglogistic_cohort(9, n=200)
        model = train_boosted_aft(X, y, delta, AftConfig(sigma=0.5, trees=10, depth=2))
        clone = BoostedAftModel.from_dict(model.to_dict())
        probe = X[:30]
        assert np.array_equal(clone.predict_tau(probe), model.predict_tau(probe))
