"""Linear regressors: ridge, lasso, elastic net, and Huber.

All four fit an unpenalized intercept by centering features and targets,
and all expose the same fitted surface: ``coef_``, ``intercept_``,
``training_loss_`` (plain MSE on the fit data), ``training_objective_``
(the exact quantity the solver minimizes) and ``converged_``.

Objectives, with n the number of rows:

* ridge        0.5 * ||y - Xw - b||^2 + 0.5 * alpha * ||w||^2
* lasso /      (1/2n) * ||y - Xw - b||^2
  elastic net    + alpha * (l1_ratio * ||w||_1 + 0.5 * (1 - l1_ratio) * ||w||^2)
* huber        (1/n) * sum rho_delta(y_i - x_i.w - b) + 0.5 * alpha * ||w||^2
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import NonConvergenceWarning, SingularSystem
from ..validation import check_n_features, check_X_y


def _check_positive(**params):
    for name, value in params.items():
        if value <= 0:
            raise ValueError(f"{name} must be strictly positive, got {value}")


class _LinearBase(BaseEstimator, RegressorMixin):
    def predict(self, X):
        X = check_n_features(X, self.n_features_in_)
        return X @ self.coef_ + self.intercept_

    def _finish(self, X, y):
        residual = y - self.predict(X)
        self.training_loss_ = float(np.mean(residual**2))
        return self


class RidgeRegressor(_LinearBase):
    """L2-regularized least squares solved through its normal equations.

    Parameters
    ----------
    alpha : float
        Regularization strength; alpha=0 turns this into plain least
        squares and raises ``SingularSystem`` on rank-deficient data.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.n_features_in_ = X.shape[1]
        x_mean, y_mean = X.mean(axis=0), y.mean()
        Xc, yc = X - x_mean, y - y_mean
        gram = Xc.T @ Xc + self.alpha * np.eye(X.shape[1])
        try:
            self.coef_ = np.linalg.solve(gram, Xc.T @ yc)
        except np.linalg.LinAlgError as err:
            raise SingularSystem(f"normal equations are singular: {err}") from err
        self.intercept_ = float(y_mean - x_mean @ self.coef_)
        self.converged_ = True
        self._finish(X, y)
        r = y - self.predict(X)
        self.training_objective_ = float(
            0.5 * r @ r + 0.5 * self.alpha * self.coef_ @ self.coef_
        )
        return self


def _coordinate_descent(Xc, yc, alpha, l1_ratio, max_iter, tol):
    """Cyclic coordinate descent with soft thresholding on centered data."""
    n, d = Xc.shape
    l1 = alpha * l1_ratio
    l2 = alpha * (1.0 - l1_ratio)
    col_sq = (Xc**2).sum(axis=0) / n
    w = np.zeros(d)
    r = yc.copy()
    for sweep in range(max_iter):
        max_delta = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            w_j = w[j]
            rho = (Xc[:, j] @ r) / n + col_sq[j] * w_j
            new = np.sign(rho) * max(abs(rho) - l1, 0.0) / (col_sq[j] + l2)
            if new != w_j:
                r -= (new - w_j) * Xc[:, j]
                max_delta = max(max_delta, abs(new - w_j))
                w[j] = new
        if max_delta < tol:
            return w, sweep + 1, True
    return w, max_iter, False


class ElasticNetRegressor(_LinearBase):
    """L1+L2-regularized least squares via cyclic coordinate descent.

    Parameters
    ----------
    alpha : float
        Overall penalty strength.
    l1_ratio : float in [0, 1]
        Share of the penalty given to the L1 term; 1 recovers the lasso,
        0 a (differently scaled) ridge.
    max_iter : int
        Coordinate sweeps before giving up; exhausting the budget emits a
        ``NonConvergenceWarning`` and keeps the best iterate.
    tol : float
        Convergence threshold on the largest coefficient change per sweep.
    """

    def __init__(self, alpha=1.0, l1_ratio=0.5, max_iter=1000, tol=1e-7):
        self.alpha = alpha
        self.l1_ratio = l1_ratio
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        _check_positive(alpha=self.alpha)
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ValueError("l1_ratio must lie in [0, 1]")
        self.n_features_in_ = X.shape[1]
        x_mean, y_mean = X.mean(axis=0), y.mean()
        w, self.n_iter_, self.converged_ = _coordinate_descent(
            X - x_mean, y - y_mean, self.alpha, self.l1_ratio, self.max_iter, self.tol
        )
        if not self.converged_:
            warnings.warn(
                f"coordinate descent used all {self.max_iter} sweeps",
                NonConvergenceWarning,
            )
        self.coef_ = w
        self.intercept_ = float(y_mean - x_mean @ w)
        self._finish(X, y)
        r = y - self.predict(X)
        self.training_objective_ = float(
            (r @ r) / (2 * len(y))
            + self.alpha
            * (
                self.l1_ratio * np.abs(w).sum()
                + 0.5 * (1.0 - self.l1_ratio) * w @ w
            )
        )
        return self


class LassoRegressor(ElasticNetRegressor):
    """Pure-L1 special case of the elastic net."""

    def __init__(self, alpha=1.0, max_iter=1000, tol=1e-7):
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol
        self.l1_ratio = 1.0


def huber_loss(residual, delta):
    a = np.abs(residual)
    return np.where(a <= delta, 0.5 * residual**2, delta * (a - 0.5 * delta))


class HuberRegressor(_LinearBase):
    """Huber-loss linear regression fit by iteratively reweighted least squares.

    ``delta`` is expressed as a multiple of a robust residual-scale
    estimate (1.4826 * MAD of the residuals of an initial ridge fit), the
    usual robust-regression convention; the absolute threshold is exposed
    as ``threshold_`` after fitting.  Residuals beyond the threshold get
    the linear branch of the Huber loss and therefore a capped influence
    on the refit, which is what makes this estimator resistant to target
    outliers regardless of the data's noise level.
    """

    def __init__(self, delta=1.0, alpha=1e-4, max_iter=1000, tol=1e-7):
        self.delta = delta
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol

    def _objective(self, X, y, w, b):
        r = y - X @ w - b
        return float(np.mean(huber_loss(r, self.threshold_)) + 0.5 * self.alpha * w @ w)

    def _estimate_threshold(self, X, y):
        pilot = RidgeRegressor(alpha=self.alpha).fit(X, y)
        r = y - pilot.predict(X)
        mad = np.median(np.abs(r - np.median(r)))
        return self.delta * max(1.4826 * mad, 1e-8)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        _check_positive(delta=self.delta, alpha=self.alpha)
        n, d = X.shape
        self.n_features_in_ = d
        self.threshold_ = self._estimate_threshold(X, y)
        w = np.zeros(d)
        b = float(y.mean())
        self.objective_path_ = [self._objective(X, y, w, b)]
        self.converged_ = False
        eye = np.eye(d)
        for _ in range(self.max_iter):
            r = y - X @ w - b
            a = np.abs(r)
            cut = self.threshold_
            weights = np.where(a <= cut, 1.0, cut / np.maximum(a, 1e-300))
            wsum = weights.sum()
            x_mean = (weights @ X) / wsum
            y_mean = (weights @ y) / wsum
            Xc, yc = X - x_mean, y - y_mean
            XcW = Xc * weights[:, None]
            try:
                new_w = np.linalg.solve(XcW.T @ Xc / n + self.alpha * eye, XcW.T @ yc / n)
            except np.linalg.LinAlgError as err:
                raise SingularSystem(f"weighted system is singular: {err}") from err
            new_b = float(y_mean - x_mean @ new_w)
            self.objective_path_.append(self._objective(X, y, new_w, new_b))
            delta_max = max(np.max(np.abs(new_w - w)), abs(new_b - b))
            w, b = new_w, new_b
            if delta_max < self.tol:
                self.converged_ = True
                break
        if not self.converged_:
            warnings.warn(
                f"IRLS used all {self.max_iter} iterations", NonConvergenceWarning
            )
        self.coef_, self.intercept_ = w, b
        self.training_objective_ = self.objective_path_[-1]
        return self._finish(X, y)
