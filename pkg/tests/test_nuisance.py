import numpy as np
import pytest

from ssmean import (
    GibbsConfig,
    RegressionDraw,
    RngStream,
    constant_nuisance,
    fit_bols,
    fit_bridge,
    fit_spike_slab,
    make_fitter,
    predict,
    zero_nuisance,
)
from ssmean.errors import (
    DimensionMismatchError,
    InsufficientDataError,
    InvalidParameterError,
    SingularDesignError,
    ValidationError,
)

RNG = RngStream(90210)


def _line_data(m=4):
    x = np.arange(m, dtype=float).reshape(-1, 1)
    return x, 1.0 + 2.0 * x[:, 0]


class TestBols:
    def test_exact_line_degenerates_to_point_mass(self):
        X, y = _line_data()
        post = fit_bols(X, y)
        pm = post.posterior_mean()
        assert pm.intercept == pytest.approx(1.0, abs=1e-9)
        assert pm.coefficients == pytest.approx([2.0], abs=1e-9)
        draw_a = post.sample(RNG.substream(1))
        draw_b = post.sample(RNG.substream(2))
        assert draw_a.intercept == pytest.approx(draw_b.intercept, abs=1e-9)

    def test_constant_outcomes(self):
        X = RNG.substream(3).generator().normal(size=(10, 2))
        post = fit_bols(X, np.full(10, 7.0))
        pm = post.posterior_mean()
        assert pm.intercept == pytest.approx(7.0, abs=1e-9)
        np.testing.assert_allclose(pm.coefficients, 0.0, atol=1e-9)

    def test_matches_normal_equations_oracle(self):
        gen = RNG.substream(4).generator()
        X = gen.normal(size=(50, 3))
        truth = np.array([5.0, 1.0, 0.5, 0.0])
        y = truth[0] + X @ truth[1:] + 0.1 * gen.normal(size=50)
        post = fit_bols(X, y)
        pm = post.posterior_mean()
        # independent oracle: solve the normal equations directly
        design = np.column_stack([np.ones(50), X])
        oracle = np.linalg.solve(design.T @ design, design.T @ y)
        np.testing.assert_allclose(
            np.concatenate([[pm.intercept], pm.coefficients]), oracle, rtol=1e-8
        )
        assert np.max(np.abs(np.concatenate([[pm.intercept], pm.coefficients]) - truth)) < 0.15

    def test_too_few_rows(self):
        X, y = _line_data(3)  # m = p + 2
        with pytest.raises(SingularDesignError, match="ridge"):
            fit_bols(X, y)

    def test_rank_deficiency(self):
        gen = RNG.substream(5).generator()
        col = gen.normal(size=(20, 1))
        X = np.hstack([col, 2.0 * col])
        with pytest.raises(SingularDesignError):
            fit_bols(X, gen.normal(size=20))

    def test_posterior_mean_matches_sampled_mean(self):
        gen = RNG.substream(6).generator()
        X = gen.normal(size=(40, 2))
        y = 1.0 + X @ np.array([2.0, -1.0]) + gen.normal(size=40)
        post = fit_bols(X, y)
        draws = post.sample_many(10**4, RNG.substream(7))
        x_new = gen.normal(size=(5, 2))
        aug = np.column_stack([np.ones(5), x_new])
        sampled = (draws @ aug.T).mean(axis=0)
        spread = (draws @ aug.T).std(axis=0)
        analytic = post.posterior_mean().evaluate(x_new)
        assert np.all(np.abs(sampled - analytic) <= 4 * spread / 100)


class TestBridge:
    def test_infinite_penalty_limit(self):
        gen = RNG.substream(8).generator()
        X = gen.normal(size=(100, 6))
        y = gen.normal(size=100)  # pure noise, nothing to keep
        post = fit_bridge(X, y, penalty=1e12)
        pm = post.posterior_mean()
        np.testing.assert_allclose(pm.coefficients, 0.0, atol=1e-8)
        assert pm.intercept == pytest.approx(y.mean(), abs=1e-8)

    def test_cv_shrinks_noise_more_than_signal(self):
        gen = RNG.substream(8).generator()
        X = gen.normal(size=(100, 6))
        noise_fit = fit_bridge(X, gen.normal(size=100))
        signal_fit = fit_bridge(X, 3.0 * X[:, 0] + 0.05 * gen.normal(size=100))
        assert noise_fit.metadata["lambda_hat"] > signal_fit.metadata["lambda_hat"]

    def test_single_feature_closed_form(self):
        # with a standardized column, the penalized coefficient is m / (m + lambda)
        gen = RNG.substream(9).generator()
        m = 30
        x = gen.normal(size=(m, 1))
        z = (x[:, 0] - x[:, 0].mean()) / x[:, 0].std()
        y = z + 3.0
        post = fit_bridge(x, y)
        lam = post.metadata["lambda_hat"]
        assert post._loc_std[1] == pytest.approx(m / (m + lam), abs=1e-10)

    def test_back_transform_round_trip(self):
        gen = RNG.substream(10).generator()
        X = gen.normal(loc=3.0, scale=2.5, size=(60, 4))
        y = 2.0 + X @ np.array([1.0, 0.0, -0.5, 0.25]) + 0.3 * gen.normal(size=60)
        post = fit_bridge(X, y)
        x_new = gen.normal(loc=3.0, scale=2.5, size=(10, 4))
        direct = post.posterior_mean().evaluate(x_new)
        z_new = (x_new - post._xbar) / post._sdev
        via_std = post._loc_std[0] + z_new[:, post._keep] @ post._loc_std[1:]
        np.testing.assert_allclose(direct, via_std, atol=1e-10)

    def test_converges_to_bols_on_noiseless_data(self):
        # CV lands on the grid floor, so the penalty is ~1e-4 of the Gram scale
        gen = RNG.substream(11).generator()
        X = gen.normal(size=(60, 3))
        y = 4.0 + X @ np.array([1.0, -0.8, 0.5])
        ridge = fit_bridge(X, y).posterior_mean()
        ols = fit_bols(X, y).posterior_mean()
        assert ridge.intercept == pytest.approx(ols.intercept, abs=1e-4)
        np.testing.assert_allclose(ridge.coefficients, ols.coefficients, atol=1e-4)

    def test_scale_equivariant_predictions(self):
        gen = RNG.substream(12).generator()
        X = gen.normal(size=(50, 3))
        y = 1.0 + X @ np.array([2.0, 0.5, 0.0]) + 0.2 * gen.normal(size=50)
        x_new = gen.normal(size=(7, 3))
        base = fit_bridge(X, y).posterior_mean().evaluate(x_new)
        X_scaled = X.copy()
        X_scaled[:, 1] *= 13.0
        x_new_scaled = x_new.copy()
        x_new_scaled[:, 1] *= 13.0
        scaled = fit_bridge(X_scaled, y).posterior_mean().evaluate(x_new_scaled)
        np.testing.assert_allclose(base, scaled, atol=1e-8)

    def test_zero_variance_column_dropped(self):
        gen = RNG.substream(13).generator()
        X = gen.normal(size=(40, 3))
        X[:, 1] = 5.0
        y = 1.0 + X[:, 0] + 0.1 * gen.normal(size=40)
        with pytest.warns(UserWarning, match="zero-variance"):
            post = fit_bridge(X, y)
        assert post.posterior_mean().coefficients[1] == 0.0
        assert post.metadata["dropped_columns"] == 1

    def test_constant_outcome_degenerates(self):
        gen = RNG.substream(14).generator()
        X = gen.normal(size=(20, 2))
        post = fit_bridge(X, np.full(20, 3.5))
        draw = post.sample(RNG.substream(15))
        assert draw.intercept == pytest.approx(3.5)
        np.testing.assert_allclose(draw.coefficients, 0.0, atol=1e-12)

    def test_all_constant_features_rejected(self):
        with pytest.raises(ValidationError):
            fit_bridge(np.ones((20, 2)), np.arange(20.0))

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            fit_bridge(np.arange(4.0).reshape(-1, 1), np.arange(4.0))

    def test_posterior_mean_matches_sampled_mean(self):
        gen = RNG.substream(16).generator()
        X = gen.normal(size=(50, 3))
        y = 2.0 + X @ np.array([1.0, 0.0, -1.0]) + 0.5 * gen.normal(size=50)
        post = fit_bridge(X, y)
        draws = post.sample_many(10**4, RNG.substream(17))
        x_new = gen.normal(size=(5, 3))
        aug = np.column_stack([np.ones(5), x_new])
        preds = draws @ aug.T
        analytic = post.posterior_mean().evaluate(x_new)
        assert np.all(np.abs(preds.mean(axis=0) - analytic) <= 4 * preds.std(axis=0) / 100)


QUICK_GIBBS = GibbsConfig(burn_in=300, sweeps=700)


class TestSpikeSlab:
    def test_constant_outcome(self):
        gen = RNG.substream(18).generator()
        X = gen.normal(size=(30, 4))
        post = fit_spike_slab(X, np.full(30, 2.0), QUICK_GIBBS, RNG.substream(19))
        pm = post.posterior_mean()
        assert pm.intercept == pytest.approx(2.0)
        np.testing.assert_allclose(pm.coefficients, 0.0, atol=1e-12)
        assert post._inclusion.max() <= 0.5

    def test_strong_signal_recovery(self):
        gen = RNG.substream(20).generator()
        n, p = 200, 20
        X = gen.normal(size=(n, p))
        beta = np.zeros(p)
        beta[:2] = 3.0
        y = 1.0 + X @ beta + gen.normal(size=n)
        post = fit_spike_slab(X, y, QUICK_GIBBS, RNG.substream(21))
        assert post._inclusion[:2].min() > 0.9
        assert post._inclusion[2:].max() < 0.2

    def test_beats_bols_on_sparse_instance(self):
        gen = RNG.substream(22).generator()
        n, p = 120, 30
        X = gen.normal(size=(n, p))
        beta = np.zeros(p)
        beta[:3] = 2.0
        y = X @ beta + gen.normal(size=n)
        X_hold = gen.normal(size=(200, p))
        truth = X_hold @ beta
        sparse_pm = fit_spike_slab(X, y, QUICK_GIBBS, RNG.substream(23)).posterior_mean()
        bols_pm = fit_bols(X, y).posterior_mean()
        mse_sparse = np.mean((sparse_pm.evaluate(X_hold) - truth) ** 2)
        mse_bols = np.mean((bols_pm.evaluate(X_hold) - truth) ** 2)
        assert mse_sparse <= mse_bols

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            fit_spike_slab(np.ones((5, 1)), np.arange(5.0), QUICK_GIBBS, RNG)

    def test_sampling_determinism(self):
        gen = RNG.substream(24).generator()
        X = gen.normal(size=(40, 3))
        y = X[:, 0] + gen.normal(size=40)
        cfg = GibbsConfig(burn_in=50, sweeps=100)
        a = fit_spike_slab(X, y, cfg, RNG.substream(25)).sample_many(20, RNG.substream(26))
        b = fit_spike_slab(X, y, cfg, RNG.substream(25)).sample_many(20, RNG.substream(26))
        np.testing.assert_array_equal(a, b)


class TestFixtures:
    def test_constant_everywhere(self):
        post = constant_nuisance(5.0)
        draw = post.sample(RNG.substream(27))
        assert draw.evaluate(np.array([[1.0, 2.0], [0.0, -5.0]])).tolist() == [5.0, 5.0]

    def test_zero_posterior_mean(self):
        pm = zero_nuisance().posterior_mean()
        assert pm.intercept == 0.0
        assert pm.evaluate(np.ones((3, 7))).tolist() == [0.0, 0.0, 0.0]

    def test_constant_draws_identical(self):
        post = constant_nuisance(5.0)
        a = post.sample(RNG.substream(28))
        b = post.sample(RNG.substream(29))
        assert a.intercept == b.intercept == 5.0

    def test_constant_rejects_nonfinite(self):
        with pytest.raises(InvalidParameterError):
            constant_nuisance(float("nan"))


class TestPredict:
    def test_examples(self):
        assert predict(RegressionDraw(1.0, np.array([2.0])), np.array([[3.0]])).tolist() == [7.0]
        zeros = predict(RegressionDraw(0.0, np.zeros(2)), np.array([[4.0, 5.0]]))
        assert zeros.tolist() == [0.0]
        out = predict(RegressionDraw(5.0, np.array([1.0, 0.5])), np.array([[2.0, 2.0]]))
        assert out.tolist() == [8.0]

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            predict(RegressionDraw(0.0, np.array([1.0])), np.ones((2, 3)))


class TestMakeFitter:
    def test_known_names(self):
        gen = RNG.substream(30).generator()
        X = gen.normal(size=(30, 2))
        y = X[:, 0] + gen.normal(size=30)
        for name in ("bols", "bridge", "zero", "constant:2.5"):
            post = make_fitter(name)(X, y, RNG.substream(31))
            assert post.posterior_mean() is not None

    def test_unknown_name(self):
        with pytest.raises(InvalidParameterError):
            make_fitter("forest")
        with pytest.raises(InvalidParameterError):
            make_fitter("constant:abc")
