"""Tests for verification metrics, calibration diagnostics, cost profiling and reports."""

import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from stormcast_edl.errors import EvaluationError
from stormcast_edl.evaluation import (
    THRESHOLDS,
    CostProfile,
    CSIReport,
    EvalReport,
    GaussianPredictive,
    LeadCurve,
    ReliabilityCurve,
    StudentTPredictive,
    contingency,
    csi,
    mse_by_lead,
    profile,
    read_report,
    reliability,
    student_t_quantile,
    uncertainty_error_correlation,
    write_report,
)
from stormcast_edl.evaluation.report import SUMMARY_NAME
from stormcast_edl.numerics import Tensor


def brute_force_counts(pred, truth, threshold):
    hits = misses = false_alarms = 0
    for p, t in zip(pred.ravel(), truth.ravel()):
        forecast = p * 255.0 >= threshold
        observed = t * 255.0 >= threshold
        hits += forecast and observed
        misses += observed and not forecast
        false_alarms += forecast and not observed
    return hits, misses, false_alarms


def make_report(variant="edl", fingerprint="abc123", wall_mean=0.01):
    return EvalReport(
        variant=variant,
        test_fingerprint=fingerprint,
        n_samples=4,
        csi=csi(np.array([0.5, 0.1, 0.9]), np.array([0.5, 0.9, 0.1]), thresholds=(74,)),
        mse=LeadCurve(kind="mse", values=[0.01, 0.02]),
        correlation=LeadCurve(kind="correlation", values=[1.0, 0.5], normalized=True),
        reliability=ReliabilityCurve(
            nominal=[0.5, 0.9], observed=[0.4, 0.85], mean_width=[0.1, 0.3], n_points=10
        ),
        cost=CostProfile(
            flops_per_pass=100,
            passes=2,
            total_flops=200,
            wall_mean=wall_mean,
            wall_std=0.001,
            timings=[wall_mean, wall_mean],
            parameter_count=7,
        ),
    )


class TestCSI:
    def test_one_hit_one_miss_one_false_alarm(self):
        truth = np.array([1.0, 1.0, 0.0, 0.0])
        pred = np.array([1.0, 0.0, 1.0, 0.0])
        report = csi(pred, truth, thresholds=(74,))
        entry = report.entries[0]
        assert (entry.hits, entry.misses, entry.false_alarms) == (1, 1, 1)
        assert report.score(74) == pytest.approx(1 / 3)

    def test_matches_brute_force_counts(self, rng):
        pred = rng.uniform(size=(3, 2, 4, 4))
        truth = rng.uniform(size=(3, 2, 4, 4))
        report = csi(pred, truth)
        assert report.thresholds == list(THRESHOLDS)
        for entry in report.entries:
            counts = brute_force_counts(pred, truth, entry.threshold)
            assert (entry.hits, entry.misses, entry.false_alarms) == counts
            assert contingency(pred, truth, entry.threshold) == counts

    def test_threshold_is_inclusive(self):
        value = np.array([74.0 / 255.0])
        assert contingency(value, value, 74) == (1, 0, 0)

    def test_perfect_forecast(self, rng):
        field = rng.uniform(size=(2, 3, 5, 5))
        report = csi(field, field, thresholds=(16, 74))
        assert all(entry.csi == 1.0 for entry in report.entries)

    def test_no_events_is_undefined(self):
        zeros = np.zeros((2, 4, 4))
        entry = csi(zeros, zeros, thresholds=(16,)).entries[0]
        assert math.isnan(entry.csi)
        assert not entry.defined

    def test_unknown_threshold(self):
        report = csi(np.zeros(3), np.zeros(3), thresholds=(16,))
        with pytest.raises(EvaluationError):
            report.score(219)

    @pytest.mark.parametrize(
        "pred, truth",
        [
            (np.zeros((2, 2)), np.zeros((2, 3))),
            (np.array([np.nan]), np.array([0.5])),
            (np.array([1.2]), np.array([0.5])),
            (np.array([0.5]), np.array([-0.1])),
        ],
    )
    def test_invalid_inputs(self, pred, truth):
        with pytest.raises(EvaluationError):
            csi(pred, truth)


class TestMSEByLead:
    def test_constant_offset(self, rng):
        truth = rng.uniform(0.0, 0.8, size=(4, 3, 5, 5))
        curve = mse_by_lead(truth + 0.1, truth, step_minutes=6.0)
        assert curve.kind == "mse"
        np.testing.assert_allclose(curve.values, [0.01, 0.01, 0.01])
        assert curve.lead_minutes == [6.0, 12.0, 18.0]
        assert all(curve.defined)

    def test_error_per_lead(self):
        truth = np.zeros((2, 3, 2, 2))
        pred = truth.copy()
        pred[:, 1] = 0.5
        pred[0, 2] = 1.0
        np.testing.assert_allclose(mse_by_lead(pred, truth).values, [0.0, 0.25, 0.5])

    def test_invalid_shapes(self):
        with pytest.raises(EvaluationError):
            mse_by_lead(np.zeros((2, 3, 4)), np.zeros((2, 3, 5)))
        with pytest.raises(EvaluationError):
            mse_by_lead(np.zeros((3, 4)), np.zeros((3, 4)))


class TestStudentTQuantile:
    @pytest.mark.parametrize("dof", [1.0, 3.0, 10.0, 200.0])
    @pytest.mark.parametrize("p", [1e-6, 0.01, 0.3, 0.5, 0.75, 0.975, 1 - 1e-6])
    def test_matches_scipy(self, p, dof):
        expected = stats.t.ppf(p, dof)
        assert student_t_quantile(p, dof) == pytest.approx(expected, rel=1e-7, abs=1e-12)

    def test_cauchy_closed_form(self):
        for p in (0.1, 0.6, 0.9):
            expected = float(mpmath.tan(mpmath.pi * (mpmath.mpf(p) - mpmath.mpf("0.5"))))
            assert float(student_t_quantile(p, 1.0)) == pytest.approx(expected, rel=1e-10)

    def test_endpoints_and_broadcasting(self):
        values = student_t_quantile(np.array([0.0, 0.5, 1.0]), 4.0)
        assert values[0] == -np.inf and values[1] == 0.0 and values[2] == np.inf
        assert student_t_quantile(0.9, np.array([[1.0], [5.0]])).shape == (2, 1)

    @pytest.mark.parametrize("p, dof", [(-0.1, 2.0), (1.1, 2.0), (0.5, 0.0)])
    def test_invalid_arguments(self, p, dof):
        with pytest.raises(EvaluationError):
            student_t_quantile(p, dof)


class TestReliability:
    def test_gaussian_self_consistency(self, rng):
        shape = (20, 2, 25, 25)
        mean = rng.uniform(0.2, 0.8, size=shape)
        variance = rng.uniform(0.001, 0.02, size=shape)
        truth = mean + np.sqrt(variance) * rng.standard_normal(shape)
        curve = reliability(GaussianPredictive(mean=mean, variance=variance), truth)
        np.testing.assert_allclose(curve.observed, curve.nominal, atol=0.015)
        assert curve.n_points == truth.size
        assert curve.calibration_error < 0.01

    def test_student_t_self_consistency(self, rng):
        shape = (40, 1, 25, 25)
        loc = rng.uniform(0.0, 1.0, size=shape)
        scale2 = rng.uniform(0.001, 0.01, size=shape)
        dof = rng.uniform(2.5, 8.0, size=shape)
        truth = loc + np.sqrt(scale2) * rng.standard_t(dof)
        predictive = StudentTPredictive(loc=loc, scale2=scale2, dof=dof)
        curve = reliability(predictive, truth)
        np.testing.assert_allclose(curve.observed, curve.nominal, atol=0.015)

    def test_overconfident_forecast_under_covers(self, rng):
        shape = (10, 1, 20, 20)
        truth = rng.standard_normal(shape)
        predictive = GaussianPredictive(mean=np.zeros(shape), variance=np.full(shape, 0.25))
        curve = reliability(predictive, truth, levels=(0.5, 0.9))
        assert all(o < n for o, n in zip(curve.observed, curve.nominal))
        widths = curve.mean_width
        assert widths[1] > widths[0]

    def test_subsample_is_seeded(self, rng):
        shape = (5, 1, 10, 10)
        truth = rng.standard_normal(shape)
        predictive = GaussianPredictive(mean=np.zeros(shape), variance=np.ones(shape))
        first = reliability(predictive, truth, max_points=100, seed=4)
        again = reliability(predictive, truth, max_points=100, seed=4)
        assert first.n_points == 100
        assert first.observed == again.observed

    def test_zero_spread_covers_exact_hits_only(self, caplog):
        mean = np.array([0.5, 0.5, 0.2])
        predictive = GaussianPredictive(mean=mean, variance=np.zeros(3))
        curve = reliability(predictive, np.array([0.5, 0.6, 0.2]), levels=(0.5, 0.9))
        assert curve.observed == pytest.approx([2 / 3, 2 / 3])
        assert curve.collapsed_points == 3
        assert "zero predictive spread" in caplog.text

    def test_invalid_levels_and_inputs(self):
        predictive = GaussianPredictive(mean=np.zeros(3), variance=np.ones(3))
        with pytest.raises(EvaluationError):
            reliability(predictive, np.zeros(3), levels=(0.0, 0.5))
        with pytest.raises(EvaluationError):
            reliability(predictive, np.zeros(0))
        with pytest.raises(EvaluationError):
            reliability(predictive, np.zeros(4))


class TestCorrelation:
    def test_perfectly_informative_uncertainty(self, rng):
        error = rng.uniform(size=(6, 3, 4, 4))
        curve = uncertainty_error_correlation(2.0 * error + 1.0, error, normalize=False)
        np.testing.assert_allclose(curve.values, [1.0, 1.0, 1.0])
        assert curve.kind == "correlation"
        assert not curve.normalized

    def test_anti_correlated(self, rng):
        error = rng.uniform(size=(5, 2, 3, 3))
        curve = uncertainty_error_correlation(-error, error, normalize=False)
        np.testing.assert_allclose(curve.values, [-1.0, -1.0])

    def test_constant_uncertainty_is_undefined(self, rng, caplog):
        error = rng.uniform(size=(4, 2, 3, 3))
        curve = uncertainty_error_correlation(np.ones_like(error), error, normalize=False)
        assert all(math.isnan(value) for value in curve.values)
        assert curve.defined == [False, False]
        assert "undefined" in caplog.text

    def test_normalized_by_first_lead(self, rng):
        error = rng.uniform(size=(30, 3, 4, 4))
        noise = rng.uniform(size=error.shape)
        uncertainty = error + noise * np.array([0.1, 1.0, 5.0])[None, :, None, None]
        raw = uncertainty_error_correlation(uncertainty, error, normalize=False).values
        normalized = uncertainty_error_correlation(uncertainty, error)
        assert normalized.normalized
        assert normalized.values[0] == pytest.approx(1.0)
        np.testing.assert_allclose(normalized.values, np.array(raw) / raw[0])

    def test_matches_pearson_of_spatial_means(self, rng):
        uncertainty = rng.uniform(size=(8, 2, 3, 3))
        error = rng.uniform(size=(8, 2, 3, 3))
        curve = uncertainty_error_correlation(uncertainty, error, normalize=False)
        for lead in range(2):
            expected = stats.pearsonr(
                uncertainty[:, lead].mean(axis=(1, 2)), error[:, lead].mean(axis=(1, 2))
            )[0]
            assert curve.values[lead] == pytest.approx(expected, abs=1e-12)

    def test_invalid_shapes(self):
        with pytest.raises(EvaluationError):
            uncertainty_error_correlation(np.zeros((3, 2, 2, 2)), np.zeros((3, 2, 2, 3)))
        with pytest.raises(EvaluationError):
            uncertainty_error_correlation(np.zeros((1, 2, 2, 2)), np.zeros((1, 2, 2, 2)))


class FakeTimer:
    def __init__(self, step):
        self.now = 0.0
        self.step = step
        self.calls = 0

    def __call__(self):
        self.now += self.step * (1 + self.calls % 2)
        self.calls += 1
        return self.now


class TestProfile:
    def test_counts_flops_per_pass(self):
        a = Tensor(np.ones((2, 3)))
        b = Tensor(np.ones((3, 4)))
        calls = []

        def runner():
            calls.append(1)
            return [a @ b for _ in range(2)]

        result = profile(runner, n_repeats=3, warmup=1, passes=2, parameter_count=5)
        assert result.flops_per_pass == 48
        assert result.total_flops == 96
        assert result.passes == 2
        assert result.parameter_count == 5
        assert len(result.timings) == 3
        assert len(calls) == 1 + 1 + 3

    def test_uses_timer(self):
        result = profile(lambda: None, n_repeats=2, warmup=0, timer=FakeTimer(0.5))
        assert result.timings == pytest.approx([1.0, 1.0])
        assert result.wall_mean == pytest.approx(1.0)
        assert result.wall_std == pytest.approx(0.0)
        assert result.total_flops == 0

    def test_single_repeat_has_zero_spread(self):
        assert profile(lambda: None, n_repeats=1, warmup=0).wall_std == 0.0

    def test_uneven_passes_rejected(self):
        a = Tensor(np.ones((2, 3)))
        with pytest.raises(EvaluationError):
            profile(lambda: [a @ np.ones((3, 1)) for _ in range(2)], n_repeats=1, passes=5)

    def test_invalid_repeats(self):
        with pytest.raises(EvaluationError):
            profile(lambda: None, n_repeats=0)

    def test_total_must_equal_product(self):
        with pytest.raises(ValueError):
            CostProfile(flops_per_pass=10, passes=3, total_flops=20, wall_mean=0.0, wall_std=0.0)


class TestReport:
    def test_round_trip(self, tmp_path):
        report = make_report()
        write_report(report, tmp_path / "report")
        for name in ("csi.csv", "lead.csv", "reliability.csv", "timings.csv", SUMMARY_NAME):
            assert (tmp_path / "report" / name).is_file()
        restored = read_report(tmp_path / "report")
        assert restored.comparable() == report.comparable()
        assert restored.cost.timings == report.cost.timings

    def test_undefined_values_survive(self, tmp_path):
        report = make_report().model_copy(
            update={"csi": CSIReport(entries=csi(np.zeros(2), np.zeros(2), (16,)).entries)}
        )
        write_report(report, tmp_path)
        entry = read_report(tmp_path).csi.entries[0]
        assert math.isnan(entry.csi) and not entry.defined

    def test_comparable_ignores_wall_clock(self):
        first = make_report(wall_mean=0.01)
        second = make_report(wall_mean=0.5)
        assert first.comparable() == second.comparable()
        assert first.comparable() != make_report(fingerprint="other").comparable()

    def test_missing_or_invalid_summary(self, tmp_path):
        with pytest.raises(EvaluationError):
            read_report(tmp_path)
        (tmp_path / SUMMARY_NAME).write_text("{not json")
        with pytest.raises(EvaluationError):
            read_report(tmp_path)
        (tmp_path / SUMMARY_NAME).write_text('{"variant": "edl"}')
        with pytest.raises(EvaluationError):
            read_report(tmp_path)


def test_threshold_grid_is_pooled_over_samples(rng):
    pred = rng.uniform(size=(2, 2, 3, 3))
    truth = rng.uniform(size=(2, 2, 3, 3))
    pooled = csi(pred, truth, thresholds=(133,)).entries[0]
    parts = [contingency(p, t, 133) for p, t in zip(pred, truth)]
    totals = [sum(values) for values in zip(*parts)]
    assert [pooled.hits, pooled.misses, pooled.false_alarms] == totals
