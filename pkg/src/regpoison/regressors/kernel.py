"""RBF-kernel regressors: kernel ridge and epsilon-insensitive SVR.

Both store their training features and predict through the Gram matrix
against them.  Offsets are handled without an explicit penalized
intercept: kernel ridge centers the targets, the SVR carries a bias
determined by its KKT conditions.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import NonConvergenceWarning, SingularSystem
from ..validation import check_n_features, check_X_y


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair of A and B."""
    sq = (
        (A**2).sum(axis=1)[:, None]
        + (B**2).sum(axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class KernelRidgeRegressor(BaseEstimator, RegressorMixin):
    """Kernel ridge regression with an RBF kernel, solved directly.

    Fitting solves the n-by-n linear system (K + alpha*I) c = y - mean(y);
    predictions add the target mean back, so no explicit intercept enters
    the regularized problem.

    Parameters
    ----------
    alpha : float
        Ridge strength on the dual coefficients; alpha=0 demands an
        invertible Gram matrix and raises ``SingularSystem`` otherwise.
    gamma : float
        Inverse squared width of the RBF kernel.
    """

    def __init__(self, alpha=1.0, gamma=1.0):
        self.alpha = alpha
        self.gamma = gamma

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.alpha < 0 or self.gamma <= 0:
            raise ValueError("alpha must be >= 0 and gamma > 0")
        self.n_features_in_ = X.shape[1]
        self.X_fit_ = X
        self.y_offset_ = float(y.mean())
        K = rbf_kernel(X, X, self.gamma)
        yc = y - self.y_offset_
        try:
            self.dual_coef_ = np.linalg.solve(K + self.alpha * np.eye(len(y)), yc)
        except np.linalg.LinAlgError as err:
            raise SingularSystem(f"kernel system is singular: {err}") from err
        self.converged_ = True
        fitted = K @ self.dual_coef_
        r = yc - fitted
        self.training_loss_ = float(np.mean(r**2))
        self.training_objective_ = float(
            0.5 * r @ r + 0.5 * self.alpha * self.dual_coef_ @ fitted
        )
        return self

    def predict(self, X):
        X = check_n_features(X, self.n_features_in_)
        if X.shape[0] == 0:
            return np.empty(0)
        return rbf_kernel(X, self.X_fit_, self.gamma) @ self.dual_coef_ + self.y_offset_


class SupportVectorRegressor(BaseEstimator, RegressorMixin):
    """Epsilon-insensitive support vector regression, RBF kernel.

    The dual is maximized by pairwise coordinate updates that preserve the
    bias equality constraint: each step picks the most KKT-violating pair
    of dual variables and moves them jointly to the exact maximizer of the
    piecewise-quadratic restriction.  Every update is guaranteed not to
    decrease the dual objective.

    Parameters
    ----------
    C : float
        Box bound on each dual variable (per-sample influence cap).
    tube : float
        Half-width of the insensitive band around the regression surface.
    gamma : float
        Inverse squared width of the RBF kernel.
    tol : float
        KKT violation below which the solver stops.  The solver also
        stops once a whole pass of updates improves the dual by less
        than ``1e-12 * max(1, |dual|)``, where further refinement cannot
        change predictions meaningfully.
    max_updates : int or None
        Cap on pair updates; ``None`` picks ``max(20000, 40 * n)``.
        Exhausting it emits ``NonConvergenceWarning``.
    """

    def __init__(self, C=1.0, tube=0.01, gamma=1.0, tol=1e-3, max_updates=None):
        self.C = C
        self.tube = tube
        self.gamma = gamma
        self.tol = tol
        self.max_updates = max_updates

    def _dual_objective(self, beta, K_beta, y):
        return float(
            -0.5 * beta @ K_beta + y @ beta - self.tube * np.abs(beta).sum()
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.C <= 0 or self.gamma <= 0 or self.tube < 0:
            raise ValueError("C and gamma must be positive, tube non-negative")
        n = X.shape[0]
        self.n_features_in_ = X.shape[1]
        self.X_fit_ = X
        C, eps = float(self.C), float(self.tube)
        budget = self.max_updates or max(20000, 40 * n)

        K = rbf_kernel(X, X, self.gamma)
        beta = np.zeros(n)
        K_beta = np.zeros(n)
        g = y.copy()  # g_i = y_i - (K beta)_i, gradient of the smooth dual part
        self.dual_objective_path_ = [self._dual_objective(beta, K_beta, y)]
        self.converged_ = False

        diag = np.diag(K).copy()
        updates = 0
        pass_start_objective = self.dual_objective_path_[0]
        while updates < budget:
            # first-order gain of increasing beta_i / decreasing beta_j
            up = g - np.where(beta >= 0.0, eps, -eps)
            down = -g + np.where(beta > 0.0, eps, -eps)
            up[beta >= C] = -np.inf
            down[beta <= -C] = -np.inf
            i = int(np.argmax(up))
            if not np.isfinite(up[i]):
                self.converged_ = True
                break
            max_down = np.max(down if i != int(np.argmax(down)) else
                              np.where(np.arange(n) == i, -np.inf, down))
            if not np.isfinite(max_down) or up[i] + max_down <= self.tol:
                self.converged_ = bool(up[i] + max_down <= self.tol)
                break
            # second-order partner: maximize violation^2 / curvature
            violation = up[i] + down
            violation[i] = -np.inf
            eta_row = np.maximum(diag[i] + diag - 2.0 * K[i], 1e-12)
            score = np.where(violation > 0.0, violation**2 / eta_row, -np.inf)
            j = int(np.argmax(score))
            if not np.isfinite(score[j]):
                j = int(np.argmax(np.where(np.arange(n) == i, -np.inf, down)))

            t = self._best_step(beta[i], beta[j], g[i], g[j], K[i, i], K[j, j], K[i, j], C, eps)
            if t == 0.0:
                # numerical stall: no candidate step improves the dual
                self.converged_ = bool(up[i] + down[j] <= self.tol)
                break
            beta[i] += t
            beta[j] -= t
            delta_col = t * (K[:, i] - K[:, j])
            K_beta += delta_col
            g -= delta_col
            updates += 1
            if updates % n == 0:
                objective = self._dual_objective(beta, K_beta, y)
                self.dual_objective_path_.append(objective)
                if objective - pass_start_objective < 1e-12 * max(1.0, abs(objective)):
                    self.converged_ = True
                    break
                pass_start_objective = objective

        if not self.converged_:
            warnings.warn(
                f"SMO stopped after {budget} pair updates", NonConvergenceWarning
            )
        self.dual_objective_path_.append(self._dual_objective(beta, K_beta, y))
        self.n_updates_ = updates
        self.dual_coef_ = beta
        self.bias_ = self._solve_bias(beta, g, C, eps)
        pred = K_beta + self.bias_
        r = y - pred
        self.training_loss_ = float(np.mean(r**2))
        self.training_objective_ = float(
            0.5 * beta @ K_beta + C * np.maximum(np.abs(r) - eps, 0.0).sum()
        )
        return self

    @staticmethod
    def _best_step(b_i, b_j, g_i, g_j, k_ii, k_jj, k_ij, C, eps):
        """Exact maximizer of the dual along beta_i += t, beta_j -= t."""
        lo = max(-C - b_i, b_j - C)
        hi = min(C - b_i, b_j + C)
        if lo >= hi:
            return 0.0
        eta = k_ii + k_jj - 2.0 * k_ij

        def gain(t):
            return (
                t * (g_i - g_j)
                - 0.5 * eta * t * t
                - eps * (abs(b_i + t) - abs(b_i))
                - eps * (abs(b_j - t) - abs(b_j))
            )

        candidates = [lo, hi]
        for bp in (-b_i, b_j):  # kinks of the absolute-value terms
            if lo < bp < hi:
                candidates.append(bp)
        if eta > 0.0:
            for s_i in (-1.0, 1.0):
                for s_j in (-1.0, 1.0):
                    t = (g_i - g_j - eps * (s_i - s_j)) / eta
                    if lo <= t <= hi and np.sign(b_i + t) in (s_i, 0.0) and np.sign(b_j - t) in (s_j, 0.0):
                        candidates.append(t)
        best = max(candidates, key=gain)
        return best if gain(best) > 0.0 else 0.0

    def _solve_bias(self, beta, g, C, eps):
        slack = 1e-8 * C
        free = (np.abs(beta) > slack) & (np.abs(beta) < C - slack)
        if free.any():
            return float(np.mean(g[free] - eps * np.sign(beta[free])))
        up = g - np.where(beta >= 0.0, eps, -eps)
        down = -g + np.where(beta > 0.0, eps, -eps)
        up[beta >= C] = -np.inf
        down[beta <= -C] = -np.inf
        lo, hi = np.max(up), -np.max(down)
        if not np.isfinite(lo):
            lo = hi
        if not np.isfinite(hi):
            hi = lo
        return float(0.5 * (lo + hi)) if np.isfinite(lo) else 0.0

    def predict(self, X):
        X = check_n_features(X, self.n_features_in_)
        if X.shape[0] == 0:
            return np.empty(0)
        return rbf_kernel(X, self.X_fit_, self.gamma) @ self.dual_coef_ + self.bias_
