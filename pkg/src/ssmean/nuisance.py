"""Posteriors over linear regression functions fitted on a training fold.

Every fitter returns a :class:`NuisancePosterior` whose draws are
:class:`RegressionDraw` values on the original data scale.  The fitters are
pure functions of their inputs plus an explicit random stream, so concurrent
use is race-free.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    InsufficientDataError,
    InvalidParameterError,
    SamplerFailureError,
    SingularDesignError,
    ValidationError,
)
from .rng import RngStream

__all__ = [
    "RegressionDraw",
    "NuisancePosterior",
    "GibbsConfig",
    "fit_bols",
    "fit_bridge",
    "fit_spike_slab",
    "constant_nuisance",
    "zero_nuisance",
    "predict",
    "make_fitter",
    "NUISANCE_NAMES",
]

RIDGE_GRID_SIZE = 100
RIDGE_GRID_FLOOR = 1e-4
RIDGE_CV_FOLDS = 10


@dataclass(frozen=True)
class RegressionDraw:
    """One sampled regression function: x -> intercept + coefficients . x."""

    intercept: float
    coefficients: np.ndarray

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        """Rowwise predictions.  Empty coefficients act as the zero vector."""
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if self.coefficients.size == 0:
            return np.full(features.shape[0], self.intercept)
        if features.shape[1] != self.coefficients.shape[0]:
            raise DimensionMismatchError(
                f"feature width {features.shape[1]} != coefficient length "
                f"{self.coefficients.shape[0]}"
            )
        return self.intercept + features @ self.coefficients


def predict(draw: RegressionDraw, features: np.ndarray) -> np.ndarray:
    """Evaluate a regression draw on a feature matrix."""
    return draw.evaluate(features)


def _draw_from_vector(vec: np.ndarray) -> RegressionDraw:
    return RegressionDraw(float(vec[0]), np.asarray(vec[1:], dtype=float))


class NuisancePosterior:
    """Base class: a sampleable posterior over regression functions."""

    method: str
    metadata: dict

    def sample(self, rng: RngStream) -> RegressionDraw:
        return _draw_from_vector(self.sample_many(1, rng)[0])

    def sample_many(self, count: int, rng: RngStream) -> np.ndarray:
        """`count` posterior draws as rows [intercept, coefficients...]."""
        raise NotImplementedError

    def posterior_mean(self) -> RegressionDraw:
        raise NotImplementedError


class MultivariateTPosterior(NuisancePosterior):
    """Multivariate t over (intercept, coefficients).

    Parameterised by a location vector and a (possibly rectangular) factor F
    with squared-scale matrix F F'; draws are location + F z / sqrt(g) with
    z standard normal and g ~ Gamma(df/2, rate df/2).  A zero factor encodes
    a point mass.
    """

    def __init__(
        self,
        method: str,
        df: float,
        location: np.ndarray,
        scale_factor: np.ndarray,
        metadata: dict | None = None,
    ):
        self.method = method
        self.df = float(df)
        self.location = np.asarray(location, dtype=float)
        self.scale_factor = np.asarray(scale_factor, dtype=float)
        self.metadata = dict(metadata or {})
        self.metadata.setdefault("method", method)
        self.metadata.setdefault("df", self.df)

    def sample_many(self, count: int, rng: RngStream) -> np.ndarray:
        if count < 1:
            raise InvalidParameterError(f"count must be >= 1, got {count}")
        if self.scale_factor.size == 0 or not self.scale_factor.any():
            return np.tile(self.location, (count, 1))
        g = rng.generator()
        z = g.standard_normal((count, self.scale_factor.shape[1]))
        gam = g.gamma(self.df / 2.0, 2.0 / self.df, size=count)
        return self.location + (z @ self.scale_factor.T) / np.sqrt(gam)[:, None]

    def posterior_mean(self) -> RegressionDraw:
        return _draw_from_vector(self.location)


class EmpiricalPosterior(NuisancePosterior):
    """Posterior represented by stored draws (retained MCMC sweeps)."""

    def __init__(self, method: str, draws: np.ndarray, metadata: dict | None = None):
        self.method = method
        self.draws = np.asarray(draws, dtype=float)
        self.metadata = dict(metadata or {})
        self.metadata.setdefault("method", method)

    def sample_many(self, count: int, rng: RngStream) -> np.ndarray:
        if count < 1:
            raise InvalidParameterError(f"count must be >= 1, got {count}")
        idx = rng.generator().integers(0, self.draws.shape[0], size=count)
        return self.draws[idx]

    def posterior_mean(self) -> RegressionDraw:
        return _draw_from_vector(self.draws.mean(axis=0))


def _point_mass(method: str, vec: np.ndarray, df: float, metadata: dict) -> MultivariateTPosterior:
    d = vec.shape[0]
    return MultivariateTPosterior(method, df, vec, np.zeros((d, d)), metadata)


def constant_nuisance(value: float) -> NuisancePosterior:
    """Degenerate posterior whose every draw is the constant function x -> value."""
    if not math.isfinite(value):
        raise InvalidParameterError(f"constant nuisance value must be finite, got {value}")
    return _point_mass("constant", np.array([float(value)]), df=1.0, metadata={"value": float(value)})


def zero_nuisance() -> NuisancePosterior:
    """Point mass at the zero function."""
    post = _point_mass("zero", np.array([0.0]), df=1.0, metadata={})
    post.method = "zero"
    post.metadata["method"] = "zero"
    return post


def _check_xy(features: np.ndarray, outcomes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(outcomes, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"features have {X.shape[0]} rows but outcomes have {y.shape[0]}"
        )
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValidationError("training data contains non-finite values")
    return X, y


def fit_bols(features: np.ndarray, outcomes: np.ndarray) -> NuisancePosterior:
    """Flat-prior Gaussian linear regression.

    The posterior of (intercept, coefficients) is multivariate t with
    df = m - p - 1, centred at the least-squares solution, with squared-scale
    matrix s^2 (X'X)^{-1} on the intercept-augmented design, where
    s^2 = RSS / (m - p - 1).  An exact fit (RSS = 0) degenerates to a point
    mass at the least-squares solution.
    """
    X, y = _check_xy(features, outcomes)
    m, p = X.shape
    d = p + 1
    if m < p + 3:
        raise SingularDesignError(
            f"flat-prior regression needs at least p + 3 = {p + 3} rows, got {m}; "
            "consider the ridge method"
        )
    design = np.column_stack([np.ones(m), X])
    q, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(m, d) * np.finfo(float).eps if diag[0] > 0 else 0.0
    if diag[0] == 0.0 or (diag <= tol).any():
        raise SingularDesignError(
            "design matrix with intercept is rank deficient; consider the ridge method"
        )
    coef_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    coef = np.empty(d)
    coef[piv] = coef_piv
    rss = float(np.sum((y - design @ coef) ** 2))
    df = m - d
    s2 = rss / df
    r_inv = scipy.linalg.solve_triangular(r, np.eye(d))
    factor = np.zeros((d, d))
    factor[piv, :] = r_inv  # (X'X)^{-1} = E R^{-1} R^{-T} E'
    factor *= math.sqrt(s2)
    meta = {"rss": rss, "sigma_sq_scale": s2, "n_rows": m, "n_features": p}
    return MultivariateTPosterior("bols", df, coef, factor, meta)


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Column standardization with population (1/m) variance; flags kept columns."""
    xbar = X.mean(axis=0)
    sdev = X.std(axis=0)
    keep = sdev > 0
    Z = (X[:, keep] - xbar[keep]) / sdev[keep]
    return Z, xbar, sdev, keep


def _original_scale_map(
    xbar: np.ndarray, sdev: np.ndarray, keep: np.ndarray
) -> np.ndarray:
    """Linear map from (intercept, kept standardized coefs) to the original scale."""
    p = xbar.shape[0]
    k = int(keep.sum())
    T = np.zeros((p + 1, 1 + k))
    T[0, 0] = 1.0
    T[0, 1:] = -xbar[keep] / sdev[keep]
    rows = np.flatnonzero(keep) + 1
    T[rows, np.arange(1, 1 + k)] = 1.0 / sdev[keep]
    return T


def _ridge_cv_lambda(Z: np.ndarray, y_scaled: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Total CV squared error per grid value, 10 deterministic folds."""
    m = Z.shape[0]
    fold_ids = np.arange(m) % RIDGE_CV_FOLDS
    errors = np.zeros(grid.shape[0])
    for f in range(RIDGE_CV_FOLDS):
        test = fold_ids == f
        train = ~test
        t = int(train.sum())
        Zt = Z[train]
        zbar = Zt.mean(axis=0)
        Zc = Zt - zbar
        yt = y_scaled[train]
        ybar = yt.mean()
        evals, evecs = np.linalg.eigh(Zc.T @ Zc)
        proj = evecs.T @ (Zc.T @ (yt - ybar))
        # coefficient paths for every lambda at once: (k, len(grid))
        coefs = evecs @ (proj[:, None] / (evals[:, None] + t * grid[None, :]))
        resid = (y_scaled[test] - ybar)[:, None] - (Z[test] - zbar) @ coefs
        errors += np.sum(resid**2, axis=0)
    return errors


def fit_bridge(
    features: np.ndarray, outcomes: np.ndarray, penalty: float | None = None
) -> NuisancePosterior:
    """Gaussian-prior ridge regression with the penalty chosen by cross-validation.

    Pipeline: standardize feature columns and scale the outcome to unit
    standard deviation; pick the penalty on a 100-point log grid by 10-fold
    CV of ridge squared error on the scaled problem; rescale the chosen
    penalty back to the raw-outcome problem; form the conjugate
    normal-inverse-gamma posterior on the standardized design (flat prior on
    the intercept, df = m - 1); map location and scale back to the original
    feature scale.  Zero-variance columns are dropped from the penalized
    block and receive coefficient zero.

    Passing `penalty` skips the CV step and uses that value as the prior
    precision on the standardized coefficients directly.
    """
    X, y = _check_xy(features, outcomes)
    m, p = X.shape
    if m < 5:
        raise InsufficientDataError(f"ridge regression needs at least 5 rows, got {m}")
    if p < 1:
        raise ValidationError("ridge regression needs at least one feature column")
    Z, xbar, sdev, keep = _standardize(X)
    if not keep.any():
        raise ValidationError("all feature columns have zero variance")
    if not keep.all():
        warnings.warn(
            f"dropping {int((~keep).sum())} zero-variance feature column(s); "
            "their coefficients are fixed at 0",
            stacklevel=2,
        )
    k = Z.shape[1]
    ybar = float(y.mean())
    y_c = y - ybar
    s_y = float(y.std())
    df = m - 1
    T = _original_scale_map(xbar, sdev, keep)
    meta: dict = {"n_rows": m, "n_features": p, "dropped_columns": int((~keep).sum())}

    if s_y == 0.0:
        loc = T @ np.concatenate([[ybar], np.zeros(k)])
        meta.update({"lambda_hat": math.inf, "degenerate": True})
        return _point_mass("bridge", loc, df, meta)

    if penalty is not None:
        if not math.isfinite(penalty) or penalty <= 0:
            raise InvalidParameterError(f"penalty must be positive and finite, got {penalty}")
        lam_hat = float(penalty)
        lam_tilde = None
        grid = None
    else:
        y_scaled = y / s_y
        lam_max = float(np.max(np.abs(Z.T @ (y_scaled - y_scaled.mean())))) / m
        if lam_max <= 0.0:
            lam_max = 1e-8
        grid = np.geomspace(lam_max, RIDGE_GRID_FLOOR * lam_max, RIDGE_GRID_SIZE)
        cv_errors = _ridge_cv_lambda(Z, y_scaled, grid)
        # the CV penalty lives on the unit-variance outcome problem; rescaling to
        # the raw-outcome prior precision (by m, i.e. outcome-scale penalty times
        # m / s_y) makes the posterior mean coincide with the CV ridge estimate
        lam_tilde = float(grid[int(np.argmin(cv_errors))]) * s_y
        lam_hat = lam_tilde * m / s_y

    A = Z.T @ Z + lam_hat * np.eye(k)
    r = scipy.linalg.cholesky(A, lower=False)
    zty = Z.T @ y_c
    coef_std = scipy.linalg.cho_solve((r, False), zty)
    rss_term = float(y_c @ y_c - zty @ coef_std)
    rss_term = max(rss_term, 0.0)
    scale_mult = math.sqrt(rss_term / df)

    loc_std = np.concatenate([[ybar], coef_std])
    factor_std = np.zeros((1 + k, 1 + k))
    factor_std[0, 0] = 1.0 / math.sqrt(m)
    factor_std[1:, 1:] = scipy.linalg.solve_triangular(r, np.eye(k))
    factor_std *= scale_mult

    meta.update(
        {
            "lambda_hat": lam_hat,
            "lambda_tilde": lam_tilde,
            "lambda_grid": None if grid is None else [float(grid[0]), float(grid[-1])],
            "cv_folds": None if grid is None else RIDGE_CV_FOLDS,
            "outcome_sd": s_y,
        }
    )
    post = MultivariateTPosterior("bridge", df, T @ loc_std, T @ factor_std, meta)
    # standardized-scale state, kept for algebraic round-trip checks
    post._loc_std = loc_std
    post._xbar = xbar
    post._sdev = sdev
    post._keep = keep
    return post


@dataclass(frozen=True)
class GibbsConfig:
    """Spike-and-slab sampler settings (exposed through the CLI config)."""

    burn_in: int = 1000
    sweeps: int = 2000
    slab_scale: float | None = None  # defaults to the number of training rows

    def __post_init__(self) -> None:
        if self.burn_in < 0 or self.sweeps < 1:
            raise InvalidParameterError("burn_in must be >= 0 and sweeps >= 1")
        if self.slab_scale is not None and self.slab_scale <= 0:
            raise InvalidParameterError("slab_scale must be positive")


def fit_spike_slab(
    features: np.ndarray,
    outcomes: np.ndarray,
    config: GibbsConfig | None = None,
    rng: RngStream | None = None,
) -> NuisancePosterior:
    """Bernoulli-Gaussian spike-and-slab regression via Gibbs sampling.

    Inclusion indicators are Bernoulli(w) with w ~ Beta(1, 1); included
    coefficients get a N(0, g * sigma^2) slab with g defaulting to the row
    count; excluded coefficients are exactly zero; sigma^2 carries a weakly
    informative inverse-gamma prior.  Features are standardized internally
    and retained sweeps are mapped back to the original scale.
    """
    config = config or GibbsConfig()
    if rng is None:
        rng = RngStream(0)
    X, y = _check_xy(features, outcomes)
    m, p = X.shape
    if m < 10:
        raise InsufficientDataError(f"spike-and-slab needs at least 10 rows, got {m}")
    Z, xbar, sdev, keep = _standardize(X)
    k = Z.shape[1]
    ybar = float(y.mean())
    y_c = y - ybar
    T = _original_scale_map(xbar, sdev, keep)
    meta: dict = {"n_rows": m, "n_features": p, "burn_in": config.burn_in, "sweeps": config.sweeps}

    if float(y.std()) == 0.0 or k == 0:
        loc = T @ np.concatenate([[ybar], np.zeros(k)])
        meta["degenerate"] = True
        meta["inclusion_frequency_max"] = 0.0
        post = _point_mass("spike_slab", loc, float(m - 1), meta)
        post._inclusion = np.zeros(p)
        return post

    g_slab = float(config.slab_scale) if config.slab_scale is not None else float(m)
    a0 = b0 = 0.001
    zz = np.einsum("ij,ij->j", Z, Z)

    gen = rng.generator()
    beta = np.zeros(k)
    gamma = np.zeros(k, dtype=bool)
    w = 0.5
    sigma_sq = max(float(np.var(y_c)), 1e-12)
    resid = y_c.copy()

    total = config.burn_in + config.sweeps
    kept_rows = np.zeros((config.sweeps, k))
    kept_sigma = np.zeros(config.sweeps)
    inclusion = np.zeros(k)

    for sweep in range(total):
        for j in range(k):
            if beta[j] != 0.0:
                resid += beta[j] * Z[:, j]
            cj = float(Z[:, j] @ resid)
            v_j = sigma_sq / (zz[j] + 1.0 / g_slab)
            mu_j = cj / (zz[j] + 1.0 / g_slab)
            log_odds = (
                math.log(w) - math.log1p(-w)
                + 0.5 * (math.log(v_j) - math.log(g_slab * sigma_sq))
                + 0.5 * mu_j * mu_j / v_j
            )
            if log_odds > 35.0:
                include = True
            elif log_odds < -35.0:
                include = False
            else:
                include = gen.random() < 1.0 / (1.0 + math.exp(-log_odds))
            gamma[j] = include
            if include:
                beta[j] = mu_j + math.sqrt(v_j) * gen.standard_normal()
                resid -= beta[j] * Z[:, j]
            else:
                beta[j] = 0.0
        n_active = int(gamma.sum())
        w = float(gen.beta(1.0 + n_active, 1.0 + k - n_active))
        w = min(max(w, 1e-12), 1.0 - 1e-12)
        shape = a0 + 0.5 * (m - 1 + n_active)
        rate = b0 + 0.5 * (float(resid @ resid) + float(beta @ beta) / g_slab)
        sigma_sq = 1.0 / gen.gamma(shape, 1.0 / rate)
        if not (np.isfinite(beta).all() and math.isfinite(sigma_sq)):
            raise SamplerFailureError(f"non-finite sampler state at sweep {sweep}")
        if sweep >= config.burn_in:
            idx = sweep - config.burn_in
            kept_rows[idx] = beta
            kept_sigma[idx] = sigma_sq
            inclusion += gamma

    inclusion /= config.sweeps
    intercepts = ybar + np.sqrt(kept_sigma / m) * gen.standard_normal(config.sweeps)
    draws_std = np.column_stack([intercepts, kept_rows])
    draws = draws_std @ T.T
    meta["slab_scale"] = g_slab
    meta["inclusion_frequency_max"] = float(inclusion.max())
    post = EmpiricalPosterior("spike_slab", draws, meta)
    full_inclusion = np.zeros(p)
    full_inclusion[keep] = inclusion
    post._inclusion = full_inclusion
    return post


Fitter = Callable[[np.ndarray, np.ndarray, RngStream], NuisancePosterior]

NUISANCE_NAMES = ("bols", "bridge", "spike", "zero", "constant")


def make_fitter(name: str, gibbs: GibbsConfig | None = None) -> Fitter:
    """Resolve a nuisance tag (e.g. 'bols', 'constant:2.5') to a fitter callable."""
    if name == "bols":
        return lambda X, y, rng: fit_bols(X, y)
    if name == "bridge":
        return lambda X, y, rng: fit_bridge(X, y)
    if name == "spike":
        return lambda X, y, rng: fit_spike_slab(X, y, gibbs, rng)
    if name == "zero":
        return lambda X, y, rng: zero_nuisance()
    if name.startswith("constant:"):
        try:
            value = float(name.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidParameterError(f"bad constant nuisance spec {name!r}") from exc
        return lambda X, y, rng: constant_nuisance(value)
    raise InvalidParameterError(
        f"unknown nuisance method {name!r}; expected one of {NUISANCE_NAMES} "
        "(constant takes the form constant:<value>)"
    )
