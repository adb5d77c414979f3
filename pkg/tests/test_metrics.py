import math

import numpy as np
import pytest

from cardiorisk.metrics import (
    antolini_cindex,
    average_precision,
    best_gmean_threshold,
    cumulative_dynamic_auc,
    evaluate_survival,
    integrated_brier,
    km_estimator,
    roc_auc,
    sens_spec_gmean,
)
from cardiorisk.survival.grid import SurvivalCurve


def step_curve(level, tmax=10.0, n=50):
    times = np.linspace(tmax / n, tmax, n)
    return SurvivalCurve(times=times, survival=np.full(n, level))


def indicator_curve(event_time, tmax=10.0, n=400):
    """Oracle predictor: survival 1 before the event, 0 after."""
    times = np.linspace(tmax / n, tmax, n)
    return SurvivalCurve(times=times, survival=(times < event_time).astype(float))


def monotone_curve(risk, tmax=10.0, n=50):
    """Exponential-ish curve whose level orders with risk."""
    times = np.linspace(tmax / n, tmax, n)
    return SurvivalCurve(times=times, survival=np.exp(-risk * times / tmax))


class TestKaplanMeier:
    def test_no_events_is_flat_one(self):
        km = km_estimator(np.array([1.0, 2.0, 3.0]), np.zeros(3))
        assert np.all(km.at(np.array([0.5, 1.5, 4.0])) == 1.0)

    def test_hand_product_limit(self):
        km = km_estimator(np.array([1.0, 2.0, 3.0]), np.ones(3))
        queries = np.array([0.5, 1.0, 2.0, 3.0])
        assert np.allclose(km.at(queries), [1.0, 2 / 3, 1 / 3, 0.0])

    def test_all_censored_at_five(self):
        km = km_estimator(np.full(10, 5.0), np.zeros(10))
        assert np.all(km.at(np.array([0.0, 2.5, 5.0])) == 1.0)

    def test_censoring_distribution_flips_indicator(self):
        y = np.array([1.0, 2.0, 3.0])
        g = km_estimator(y, np.array([1, 1, 1]), censoring=True)
        assert np.all(g.at(y) == 1.0)  # no censoring events at all

    def test_left_continuous_evaluation(self):
        km = km_estimator(np.array([1.0, 2.0]), np.ones(2))
        assert km.at(np.array([1.0]), side="left")[0] == 1.0
        assert km.at(np.array([1.0]), side="right")[0] == pytest.approx(0.5)


class TestAntoliniCindex:
    def test_perfectly_ordered_curves(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        delta = np.ones(4)
        curves = [monotone_curve(r) for r in (8.0, 4.0, 2.0, 1.0)]
        assert antolini_cindex(curves, y, delta) == 1.0

    def test_identical_curves_give_half(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        curves = [step_curve(0.7) for _ in y]
        assert antolini_cindex(curves, y, np.ones(4)) == 0.5

    def test_random_curves_near_half(self):
        # the C statistic's spread scales with the subject count, so use
        # enough subjects that 0.02 covers several standard errors
        rng = np.random.default_rng(0)
        n = 2000
        y = rng.uniform(0.5, 9.5, size=n)
        delta = np.ones(n)
        curves = [monotone_curve(rng.uniform(0.5, 8.0)) for _ in range(n)]
        assert antolini_cindex(curves, y, delta) == pytest.approx(0.5, abs=0.02)

    def test_no_comparable_pairs_is_nan(self):
        y = np.array([1.0, 2.0])
        curves = [step_curve(0.5)] * 2
        assert math.isnan(antolini_cindex(curves, y, np.zeros(2)))

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        n = 40
        y = rng.uniform(0.5, 9.5, size=n)
        delta = rng.integers(0, 2, size=n)
        delta[0] = 1
        risks = rng.uniform(0.3, 6.0, size=n)
        base = [monotone_curve(r) for r in risks]
        squeezed = [
            SurvivalCurve(times=c.times, survival=c.survival**3) for c in base
        ]
        assert antolini_cindex(base, y, delta) == antolini_cindex(squeezed, y, delta)


class TestIntegratedBrier:
    def test_constant_half_uncensored(self):
        rng = np.random.default_rng(2)
        y = rng.uniform(1.0, 9.0, size=60)
        curves = [step_curve(0.5) for _ in y]
        assert integrated_brier(curves, y, np.ones(60)) == pytest.approx(0.25, abs=1e-9)

    def test_oracle_predictor_near_zero(self):
        rng = np.random.default_rng(3)
        y = rng.uniform(1.0, 9.0, size=80)
        curves = [indicator_curve(t) for t in y]
        assert integrated_brier(curves, y, np.ones(80)) <= 0.01

    def test_all_censored_finite(self):
        rng = np.random.default_rng(4)
        y = rng.uniform(1.0, 9.0, size=30)
        curves = [step_curve(0.8) for _ in y]
        value = integrated_brier(curves, y, np.zeros(30))
        assert np.isfinite(value)

    def test_km_curve_not_worse_than_constant_half(self):
        rng = np.random.default_rng(5)
        for trial in range(5):
            y = rng.uniform(0.5, 9.5, size=80)
            delta = rng.integers(0, 2, size=80)
            delta[:5] = 1
            km = km_estimator(y, delta)
            times = np.linspace(0.2, 9.8, 49)
            km_vals = km.at(times)
            km_curves = [SurvivalCurve(times=times, survival=km_vals) for _ in y]
            const = [SurvivalCurve(times=times, survival=np.full(49, 0.5)) for _ in y]
            ibs_km = integrated_brier(km_curves, y, delta, times)
            ibs_const = integrated_brier(const, y, delta, times)
            assert ibs_km <= ibs_const + 1e-12, trial


class TestCumulativeDynamicAuc:
    def test_perfect_separation(self):
        y = np.array([1.0, 2.0, 3.0, 6.0, 7.0, 8.0])
        delta = np.array([1, 1, 1, 0, 0, 0])
        curves = [monotone_curve(r) for r in (9.0, 8.0, 7.0, 0.5, 0.4, 0.3)]
        values, mean = cumulative_dynamic_auc(curves, y, delta, [4.0, 5.0])
        assert np.all(values == 1.0)
        assert mean == 1.0

    def test_uninformative_scores_near_half(self):
        rng = np.random.default_rng(6)
        n = 1000
        y = rng.uniform(0.5, 9.5, size=n)
        delta = np.ones(n)
        curves = [step_curve(rng.uniform(0.1, 0.9)) for _ in range(n)]
        values, mean = cumulative_dynamic_auc(curves, y, delta, [5.0])
        assert values[0] == pytest.approx(0.5, abs=0.03)

    def test_equals_roc_auc_without_censoring_before_horizon(self):
        rng = np.random.default_rng(7)
        n = 120
        y = rng.uniform(0.5, 9.5, size=n)
        delta = np.ones(n)
        risks = rng.uniform(0.2, 5.0, size=n)
        curves = [monotone_curve(r) for r in risks]
        horizon = 5.0
        values, _ = cumulative_dynamic_auc(curves, y, delta, [horizon])
        scores = np.array([1.0 - c.at(horizon) for c in curves])
        labels = (y <= horizon).astype(int)
        assert values[0] == pytest.approx(roc_auc(scores, labels), rel=1e-12)

    def test_empty_horizon_skipped(self):
        y = np.array([2.0, 3.0, 4.0])
        curves = [step_curve(0.5)] * 3
        with pytest.warns(UserWarning, match="skipped"):
            values, mean = cumulative_dynamic_auc(curves, y, np.ones(3), [1.0, 3.5])
        assert math.isnan(values[0]) and np.isfinite(values[1])


class TestClassificationMetrics:
    def test_perfect_separation(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, 0, 0])
        assert roc_auc(scores, labels) == 1.0
        assert average_precision(scores, labels) == 1.0

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(8)
        labels = rng.integers(0, 2, size=10000)
        scores = rng.uniform(size=10000)
        assert roc_auc(scores, labels) == pytest.approx(0.5, abs=0.02)

    def test_reversed_scores_complement(self):
        rng = np.random.default_rng(9)
        scores = rng.normal(size=500)  # continuous, no ties
        labels = rng.integers(0, 2, size=500)
        assert roc_auc(scores, labels) + roc_auc(-scores, labels) == pytest.approx(1.0, rel=1e-12)

    def test_hand_confusion_matrix(self):
        labels = np.array([1, 0, 1, 0])
        scores = np.array([0.9, 0.8, 0.7, 0.1])
        sens, spec, gmean = sens_spec_gmean(scores, labels, 0.75)
        assert sens == 0.5 and spec == 0.5
        assert gmean == pytest.approx(0.5)

    def test_single_class_is_nan(self):
        assert math.isnan(roc_auc(np.array([0.5, 0.6]), np.array([1, 1])))
        assert math.isnan(average_precision(np.array([0.5, 0.6]), np.array([0, 0])))

    def test_best_gmean_threshold(self):
        labels = np.array([1, 1, 0, 0, 0])
        scores = np.array([0.9, 0.7, 0.6, 0.2, 0.1])
        t = best_gmean_threshold(scores, labels)
        sens, spec, gmean = sens_spec_gmean(scores, labels, t)
        assert gmean == 1.0


class TestEvaluateSurvival:
    def test_report_fields_in_range(self):
        rng = np.random.default_rng(10)
        n = 80
        y = rng.uniform(0.5, 9.5, size=n)
        delta = rng.integers(0, 2, size=n)
        delta[:10] = 1
        curves = [monotone_curve(rng.uniform(0.3, 4.0)) for _ in range(n)]
        report = evaluate_survival(curves, y, delta)
        for name in ("c_index", "auc_5y", "ibs", "mean_cd_auc"):
            value = getattr(report, name)
            assert 0.0 <= value <= 1.0, name
