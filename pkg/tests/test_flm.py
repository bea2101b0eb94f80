import numpy as np
import pytest

from curveprob.curves import Covariate, Curve, Grid
from curveprob.errors import DegenerateInputError, StructureError, UsageError
from curveprob.flm import (
    RegressionSample,
    TruncationRule,
    build_far_design,
    fit,
    from_json,
    predict,
    to_json,
)

GRID = Grid(40)


def curve_from(fn):
    return Curve(GRID, np.asarray([fn(t) for t in GRID.points]))


def rank_two_dataset(n=20, noise=0.0, seed=0):
    """Responses are a fixed rank-2 linear image of the covariates."""
    rng = np.random.default_rng(seed)
    f1 = curve_from(lambda t: np.cos(2 * np.pi * t))
    f2 = curve_from(lambda t: 1.0)
    e1 = curve_from(lambda t: np.sin(2 * np.pi * t))
    e2 = curve_from(lambda t: t)
    xs, ys = [], []
    for _ in range(n):
        a, b = rng.normal(size=2)
        x = Curve(GRID, a * f1.values + b * f2.values)
        y = a * e1.values + b * e2.values
        if noise:
            y = y + noise * rng.normal(size=GRID.size)
        xs.append(Covariate((x,)))
        ys.append(Curve(GRID, y))
    return RegressionSample(tuple(ys), tuple(xs))


class TestFitExactRecovery:
    def test_noiseless_rank_two_interpolates(self):
        model = fit(rank_two_dataset(), TruncationRule.fixed(2), center=True)
        assert model.n_components == 2
        assert np.max(np.abs(model.residual_matrix)) <= 1e-8

    def test_in_sample_prediction_matches_response(self):
        sample = rank_two_dataset()
        model = fit(sample, TruncationRule.fixed(2))
        for y, x in zip(sample.ys, sample.xs):
            np.testing.assert_allclose(predict(model, x).values, y.values, atol=1e-8)

    def test_residuals_equal_y_minus_predict_bitwise(self):
        sample = rank_two_dataset(noise=0.3, seed=2)
        model = fit(sample, TruncationRule.fixed(2))
        for k, (y, x) in enumerate(zip(sample.ys, sample.xs)):
            np.testing.assert_array_equal(
                model.residual_matrix[k], y.values - predict(model, x).values
            )


class TestRankOneRecovery:
    def test_recovers_unit_norm_direction(self):
        # x alternates +-f with ||f|| = 1, y = e <x, f>; the fitted operator
        # applied to f must return e
        sw = GRID.quad_weights_sqrt()
        f_vals = np.cos(2 * np.pi * GRID.points)
        f_vals = f_vals / np.sqrt(np.sum((f_vals * sw) ** 2))
        f = Curve(GRID, f_vals)
        e = curve_from(lambda t: np.sin(2 * np.pi * t))
        xs, ys = [], []
        for k in range(10):
            sign = 1.0 if k % 2 == 0 else -1.0
            xs.append(Covariate((Curve(GRID, sign * f.values),)))
            ys.append(Curve(GRID, sign * e.values))
        model = fit(RegressionSample(tuple(ys), tuple(xs)), TruncationRule.fixed(1),
                    center=False)
        got = predict(model, Covariate((f,)))
        np.testing.assert_allclose(got.values, e.values, atol=1e-6)

    def test_single_component_fit_is_score_regression(self):
        # oracle: with one retained direction the operator is the least
        # squares regression of the responses on the first principal score
        sample = rank_two_dataset(n=60, noise=0.5, seed=5)
        model = fit(sample, TruncationRule.fixed(1), center=True)

        x = np.asarray([cv.coords() for cv in sample.xs])
        y = np.asarray([cu.values for cu in sample.ys])
        xc = x - x.mean(axis=0)
        yc = y - y.mean(axis=0)
        v1 = model.covariate_spectrum.eigenvectors[:, 0]
        scores = xc @ v1
        slope = (scores @ yc) / (scores @ scores)  # lstsq oracle, per grid point

        probe = sample.xs[0]
        got = predict(model, probe).values
        score_probe = (probe.coords() - x.mean(axis=0)) @ v1
        want = y.mean(axis=0) + slope * score_probe
        np.testing.assert_allclose(got, want, atol=1e-10)

    def test_uncorrelated_score_gives_null_operator(self):
        # responses built from noise independent of the covariates: the
        # single-component operator is pure sampling noise, bounded by a
        # Monte-Carlo estimate of the score-regression error
        rng = np.random.default_rng(6)
        n = 200
        xs, ys = [], []
        for _ in range(n):
            xs.append(Covariate((Curve(GRID, rng.normal(size=GRID.size)),)))
            ys.append(Curve(GRID, rng.normal(size=GRID.size)))
        model = fit(RegressionSample(tuple(ys), tuple(xs)), TruncationRule.fixed(1))
        # slope se per point ~ sd(y) / (sqrt(n) * sd(score)); allow 6 sigma
        lam1 = model.covariate_spectrum.eigenvalues[0]
        bound = 6.0 / np.sqrt(n * lam1)
        sw = GRID.quad_weights_sqrt()
        operator_max = np.max(np.abs(model.coef_w / sw[:, None]))
        assert operator_max <= bound


class TestPredict:
    def test_mean_covariate_maps_to_mean_response(self):
        sample = rank_two_dataset(noise=0.4, seed=3)
        model = fit(sample, TruncationRule.fixed(2), center=True)
        mean_cov = Covariate((Curve(GRID, np.asarray(
            [c.curve_parts[0].values for c in sample.xs]).mean(axis=0)),))
        y_mean = np.asarray([c.values for c in sample.ys]).mean(axis=0)
        np.testing.assert_allclose(predict(model, mean_cov).values, y_mean, atol=1e-10)

    def test_linearity(self):
        sample = rank_two_dataset(noise=0.2, seed=4)
        model = fit(sample, TruncationRule.fixed(2), center=True)
        rng = np.random.default_rng(0)
        a = Covariate((Curve(GRID, rng.normal(size=GRID.size)),))
        b = Covariate((Curve(GRID, rng.normal(size=GRID.size)),))
        zero = Covariate((Curve.constant(GRID, 0.0),))
        lhs = predict(model, Covariate((a.curve_parts[0] + b.curve_parts[0],))).values \
            - predict(model, zero).values
        rhs = (predict(model, a).values - predict(model, zero).values) \
            + (predict(model, b).values - predict(model, zero).values)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_structure_mismatch(self):
        model = fit(rank_two_dataset(), TruncationRule.fixed(2))
        with pytest.raises(StructureError):
            predict(model, Covariate((), (1.0,)))


class TestFitValidation:
    def test_degenerate_covariates(self):
        ys = tuple(Curve.constant(GRID, float(k)) for k in range(4))
        xs = tuple(Covariate((Curve.constant(GRID, 1.0),)) for _ in range(4))
        with pytest.raises(DegenerateInputError):
            fit(RegressionSample(ys, xs), TruncationRule.fixed(1), center=True)

    def test_centered_residuals_average_to_zero(self):
        sample = rank_two_dataset(n=30, noise=0.5, seed=9)
        model = fit(sample, TruncationRule.fixed(1), center=True)
        np.testing.assert_allclose(model.residual_matrix.mean(axis=0), 0.0, atol=1e-10)

    def test_dof_correction_scales_noise_spectrum(self):
        sample = rank_two_dataset(n=20, noise=0.5, seed=10)
        plain = fit(sample, TruncationRule.fixed(2))
        corrected = fit(sample, TruncationRule.fixed(2), dof_correction=True)
        ratio = corrected.noise_spectrum.eigenvalues[0] / plain.noise_spectrum.eigenvalues[0]
        assert ratio == pytest.approx(20 / 18)


class TestConsistencySurrogates:
    def test_prediction_error_decreases_with_n(self):
        # median in- and out-of-sample errors over 100 replications drop
        # as the sample grows
        grid = Grid(20)
        t = grid.points
        f1 = np.cos(2 * np.pi * t)
        f2 = np.ones_like(t)
        e1 = np.sin(2 * np.pi * t)
        e2 = t.copy()
        sw = grid.quad_weights_sqrt()

        def true_response(x_vals):
            a = np.sum(x_vals * f1 * grid.quad_weights())
            b = np.sum(x_vals * f2 * grid.quad_weights())
            return a * e1 / np.sum(f1 * f1 * grid.quad_weights()) + b * e2 / np.sum(
                f2 * f2 * grid.quad_weights()
            )

        def l2(vals):
            return float(np.sqrt(np.sum((vals * sw) ** 2)))

        sizes = (50, 200, 800)
        in_sample = {n: [] for n in sizes}
        out_sample = {n: [] for n in sizes}
        rng = np.random.default_rng(42)
        for rep in range(100):
            for n in sizes:
                xs, ys = [], []
                for _ in range(n):
                    a, b = rng.normal(size=2)
                    x_vals = a * f1 + b * f2
                    xs.append(Covariate((Curve(grid, x_vals),)))
                    ys.append(Curve(grid, true_response(x_vals)
                                    + 0.5 * rng.normal(size=grid.size)))
                model = fit(RegressionSample(tuple(ys), tuple(xs)),
                            TruncationRule.fixed(2))
                k = int(rng.integers(n))
                xk = xs[k]
                in_sample[n].append(
                    l2(predict(model, xk).values - true_response(
                        xk.curve_parts[0].values)))
                af, bf = rng.normal(size=2)
                fresh_vals = af * f1 + bf * f2
                out_sample[n].append(
                    l2(predict(model, Covariate((Curve(grid, fresh_vals),))).values
                       - true_response(fresh_vals)))
        med_in = [np.median(in_sample[n]) for n in sizes]
        med_out = [np.median(out_sample[n]) for n in sizes]
        assert med_in[0] > med_in[1] > med_in[2]
        assert med_out[0] > med_out[1] > med_out[2]


class TestFarDesign:
    def test_order_one_pairs(self):
        g = Grid(4)
        c1, c2, c3 = (Curve.constant(g, float(k)) for k in (1, 2, 3))
        sample, design = build_far_design([c1, c2, c3], order=1)
        assert len(sample) == 2
        assert sample.ys[0].values[0] == 2.0
        assert sample.xs[0].curve_parts[0].values[0] == 1.0
        assert sample.ys[1].values[0] == 3.0
        assert sample.xs[1].curve_parts[0].values[0] == 2.0
        assert design.response_indices == (1, 2)

    def test_order_two_single_pair(self):
        g = Grid(4)
        c1, c2, c3 = (Curve.constant(g, float(k)) for k in (1, 2, 3))
        with pytest.raises(UsageError):
            # 2 = n_effective < 2 pairs needed by the regression; the design
            # itself is fine but only one pair exists
            sample, _ = build_far_design([c1, c2, c3], order=2)
            fit(sample, TruncationRule.fixed(1))

    def test_order_two_lag_order(self):
        g = Grid(4)
        curves = [Curve.constant(g, float(k)) for k in (1, 2, 3, 4)]
        sample, _ = build_far_design(curves, order=2)
        # covariate of response 3 is (lag1=2, lag2=1)
        assert sample.ys[0].values[0] == 3.0
        assert sample.xs[0].curve_parts[0].values[0] == 2.0
        assert sample.xs[0].curve_parts[1].values[0] == 1.0

    def test_exogenous_parts_are_same_position(self):
        g = Grid(4)
        series = [Curve.constant(g, float(k)) for k in range(5)]
        exog = [Covariate((Curve.constant(g, 10.0 + k),)) for k in range(5)]
        sample, design = build_far_design(series, order=1, exog=exog)
        assert design.n_exog_curves == 1
        for pair_idx, k in enumerate(design.response_indices):
            parts = sample.xs[pair_idx].curve_parts
            assert parts[0].values[0] == float(k - 1)      # lag
            assert parts[1].values[0] == 10.0 + k          # same-position exogenous

    def test_too_short_series(self):
        g = Grid(4)
        with pytest.raises(UsageError):
            build_far_design([Curve.constant(g, 1.0)], order=1)


class TestSerialization:
    def test_round_trip_preserves_predictions(self):
        sample = rank_two_dataset(n=15, noise=0.3, seed=8)
        model = fit(sample, TruncationRule.pve(0.9), center=True)
        clone = from_json(to_json(model))
        x = sample.xs[3]
        np.testing.assert_array_equal(predict(model, x).values, predict(clone, x).values)
        np.testing.assert_array_equal(model.residual_matrix, clone.residual_matrix)
        np.testing.assert_array_equal(
            model.noise_spectrum.eigenvalues, clone.noise_spectrum.eigenvalues
        )
        assert clone.truncation.kind == "pve"

    def test_rejects_foreign_documents(self):
        with pytest.raises(UsageError):
            from_json('{"format": "something-else", "version": 1}')


class TestTruncationRuleParse:
    def test_forms(self):
        assert TruncationRule.parse("pve:0.85").v == 0.85
        assert TruncationRule.parse("fixed:3").k == 3
        rule = TruncationRule.parse("threshold:mn=12,absolute")
        assert rule.m_n == 12.0 and rule.relative is False
        assert TruncationRule.parse("threshold:auto").m_n is None

    def test_bad_forms(self):
        with pytest.raises(UsageError):
            TruncationRule.parse("frobnicate:1")
        with pytest.raises(UsageError):
            TruncationRule.parse("threshold:bogus=1")
