"""Poisson regression with log link, fitted by IRLS, plus fit diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

IRLS_TOL = 1e-10
IRLS_MAX_ITER = 50
_SEQUENTIAL_LIMIT = 30.0


class SingularDesignError(np.linalg.LinAlgError):
    """The Fisher information is singular (collinear or constant covariates)."""


class DegenerateResponseError(ValueError):
    """All responses are zero, so the log-link MLE does not exist."""


@dataclass(frozen=True)
class GlmFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    null_deviance: float
    residual_deviance: float
    n_obs: int
    p_params: int
    converged: bool
    iterations: int
    covariance: np.ndarray = field(repr=False, default=None)
    deviance_path: tuple = field(repr=False, default=())

    @property
    def df_residual(self) -> int:
        return self.n_obs - self.p_params

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "standard_errors": [float(s) for s in self.standard_errors],
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "null_deviance": float(self.null_deviance),
            "residual_deviance": float(self.residual_deviance),
            "n_obs": int(self.n_obs),
            "p_params": int(self.p_params),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GlmFit":
        return cls(
            coefficients=np.asarray(d["coefficients"], dtype=float),
            standard_errors=np.asarray(d["standard_errors"], dtype=float),
            null_deviance=float(d["null_deviance"]),
            residual_deviance=float(d["residual_deviance"]),
            n_obs=int(d["n_obs"]),
            p_params=int(d["p_params"]),
            converged=bool(d["converged"]),
            iterations=int(d["iterations"]),
            covariance=np.asarray(d["covariance"], dtype=float),
        )

    @classmethod
    def from_coefficients(cls, coefficients) -> "GlmFit":
        """A fit carrying only coefficients, e.g. published values."""
        coef = np.asarray(coefficients, dtype=float)
        p = coef.size
        return cls(coef, np.full(p, np.nan), np.nan, np.nan, 0, p, True, 0, np.full((p, p), np.nan))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    df: int
    p_value: float


def poisson_deviance(y, mu) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(term - (y - mu)))


def _validate_design(X, y):
    X, y = check_X_y(X, y, dtype=float, y_numeric=True)
    n, p = X.shape
    if n < p:
        raise ValueError(f"need n >= p, got n={n}, p={p}")
    if np.any(y < 0):
        raise ValueError("response must be non-negative counts")
    if not np.allclose(X[:, 0], 1.0):
        raise ValueError("first design column must be the intercept (all ones)")
    return X, y


def _standardize(X):
    """Return ``(Xs, A)`` with ``Xs = X @ A``; non-intercept columns centred and scaled."""
    p = X.shape[1]
    A = np.eye(p)
    if p == 1:
        return X.copy(), A
    mean = X[:, 1:].mean(axis=0)
    scale = X[:, 1:].std(axis=0)
    if np.any(scale == 0):
        raise SingularDesignError("a covariate column is constant (collinear with intercept)")
    A[1:, 1:] = np.diag(1.0 / scale)
    A[0, 1:] = -mean / scale
    return X @ A, A


def fit_poisson(X, y, tol: float = IRLS_TOL, max_iter: int = IRLS_MAX_ITER) -> GlmFit:
    """Maximum-likelihood Poisson regression with log link.

    ``X`` must carry a leading column of ones. Covariates are standardised
    internally; coefficients and covariance are reported on the raw scale.
    Step-halving keeps the deviance non-increasing between iterates.
    """
    X, y = _validate_design(X, y)
    if not np.any(y > 0):
        raise DegenerateResponseError("all-zero response: log-link MLE diverges")
    n, p = X.shape
    Xs, A = _standardize(X)
    if np.linalg.matrix_rank(Xs) < p:
        raise SingularDesignError("design matrix is rank deficient")

    ybar = y.mean()
    null_dev = poisson_deviance(y, np.full(n, ybar))

    # start from the intercept-only optimum
    beta = np.zeros(p)
    beta[0] = math.log(ybar)
    eta = Xs @ beta
    mu = np.exp(eta)
    dev = poisson_deviance(y, mu)
    path = [dev]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        W = mu
        z = eta + (y - mu) / mu
        info = Xs.T @ (W[:, None] * Xs)
        try:
            new_beta = np.linalg.solve(info, Xs.T @ (W * z))
        except np.linalg.LinAlgError:
            raise SingularDesignError("singular Fisher information") from None
        step = new_beta - beta
        for _ in range(30):
            cand = beta + step
            cand_eta = Xs @ cand
            if np.all(np.isfinite(cand_eta)) and np.max(cand_eta) < 700:
                cand_mu = np.exp(cand_eta)
                cand_dev = poisson_deviance(y, cand_mu)
                if cand_dev <= dev + 1e-12 * (abs(dev) + 1.0):
                    break
            step = step / 2.0
        else:
            break
        beta, eta, mu = cand, cand_eta, cand_mu
        change = abs(cand_dev - dev) / (abs(cand_dev) + 0.1)
        dev = cand_dev
        path.append(dev)
        if change < tol:
            converged = True
            break

    info = Xs.T @ (mu[:, None] * Xs)
    try:
        cov_s = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise SingularDesignError("singular Fisher information at optimum") from None
    coef = A @ beta
    cov = A @ cov_s @ A.T
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return GlmFit(
        coefficients=coef,
        standard_errors=se,
        null_deviance=null_dev,
        residual_deviance=dev,
        n_obs=n,
        p_params=p,
        converged=converged,
        iterations=it,
        covariance=cov,
        deviance_path=tuple(path),
    )


def predict_mean(fit: GlmFit, covariates) -> float:
    x = np.asarray(covariates, dtype=float)
    if x.shape != (fit.p_params,):
        raise ValueError(f"expected {fit.p_params} covariates, got shape {x.shape}")
    return math.exp(float(np.dot(fit.coefficients, x)))


def fitted_means(fit: GlmFit, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != fit.p_params:
        raise ValueError("design does not match the fit")
    return np.exp(X @ fit.coefficients)


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail of chi-square(df): regularized incomplete gamma Q(df/2, x/2)."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def pearson_statistic(y, mu) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(np.sum((y - mu) ** 2 / mu))


def pearson_gof(fit: GlmFit, X, y, df: int | None = None) -> GofResult:
    """Pearson chi-square goodness of fit; ``df`` defaults to ``n - p``."""
    mu = fitted_means(fit, X)
    stat = pearson_statistic(y, mu)
    if df is None:
        df = len(mu) - fit.p_params
    if df <= 0:
        raise ValueError("too few observations for a goodness-of-fit test (df <= 0)")
    return GofResult(stat, df, chi_square_sf(stat, df))


def deviance_test(fit: GlmFit) -> GofResult:
    df = fit.df_residual
    if df <= 0:
        raise ValueError("too few observations for a deviance test (df <= 0)")
    stat = max(fit.residual_deviance, 0.0)
    return GofResult(fit.residual_deviance, df, chi_square_sf(stat, df))


def normal_two_sided_p(z: float) -> float:
    return float(special.erfc(abs(z) / math.sqrt(2.0)))


def wald_tests(fit: GlmFit) -> list[tuple[int, float, float]]:
    se = fit.standard_errors
    if not np.all(np.isfinite(se)) or np.any(se <= 0):
        raise SingularDesignError("Wald tests need finite positive standard errors")
    out = []
    for i, (b, s) in enumerate(zip(fit.coefficients, se)):
        z = float(b / s)
        out.append((i, z, normal_two_sided_p(z)))
    return out


def poisson_sample(rate: float, rng) -> int:
    """One Poisson draw by sequential-search inversion of a single uniform."""
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError(f"Poisson rate must be finite and positive, got {rate}")
    if rate >= _SEQUENTIAL_LIMIT:
        return int(rng.poisson(rate))
    u = rng.random()
    k = 0
    p = math.exp(-rate)
    cdf = p
    while u > cdf:
        k += 1
        p *= rate / k
        cdf += p
        if p == 0.0:
            break
    return k


class PoissonRegression(BaseEstimator, RegressorMixin):
    """Log-link Poisson GLM as a scikit-learn regressor.

    ``X`` holds covariates only; the intercept column is added when
    ``fit_intercept`` is true. Fitted attributes: ``fit_`` (a :class:`GlmFit`),
    ``coef_``, ``intercept_``, ``bse_``.
    """

    def __init__(self, fit_intercept=True, tol=IRLS_TOL, max_iter=IRLS_MAX_ITER):
        self.fit_intercept = fit_intercept
        self.tol = tol
        self.max_iter = max_iter

    def _design(self, X):
        X = np.asarray(X, dtype=float)
        if self.fit_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
        return X

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        self.fit_ = fit_poisson(self._design(X), y, tol=self.tol, max_iter=self.max_iter)
        coef = self.fit_.coefficients
        self.intercept_ = float(coef[0]) if self.fit_intercept else 0.0
        self.coef_ = coef[1:] if self.fit_intercept else coef
        self.bse_ = self.fit_.standard_errors
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return fitted_means(self.fit_, self._design(X))

    def score(self, X, y, sample_weight=None):
        """Fraction of null deviance explained (D^2)."""
        mu = self.predict(X)
        y = np.asarray(y, dtype=float)
        null = poisson_deviance(y, np.full_like(y, y.mean()))
        return 1.0 - poisson_deviance(y, mu) / null if null > 0 else 1.0

    def pearson_gof(self, X, y):
        check_is_fitted(self, "fit_")
        return pearson_gof(self.fit_, self._design(check_array(X, dtype=float)), y)

    def deviance_test(self):
        check_is_fitted(self, "fit_")
        return deviance_test(self.fit_)

    def wald_tests(self):
        check_is_fitted(self, "fit_")
        return wald_tests(self.fit_)
