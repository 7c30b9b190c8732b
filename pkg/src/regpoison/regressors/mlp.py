"""Single-hidden-layer perceptron regressor trained by mini-batch gradient descent."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..validation import check_n_features, check_X_y

ACTIVATIONS = ("relu", "tanh")


def _forward(params, X, activation):
    W1, b1, W2, b2 = params
    pre = X @ W1 + b1
    hidden = np.maximum(pre, 0.0) if activation == "relu" else np.tanh(pre)
    return pre, hidden, hidden @ W2 + b2


def loss_and_grads(params, X, y, activation="relu"):
    """Mean squared error and its exact gradients for one batch.

    Kept as a free function so the analytic gradients can be checked
    against finite differences without touching estimator state.
    """
    W1, b1, W2, b2 = params
    m = X.shape[0]
    pre, hidden, pred = _forward(params, X, activation)
    err = pred - y
    loss = float(np.mean(err**2))
    d_pred = 2.0 * err / m
    grad_W2 = hidden.T @ d_pred
    grad_b2 = d_pred.sum(axis=0)
    gate = (pre > 0.0).astype(X.dtype) if activation == "relu" else 1.0 - hidden**2
    d_hidden = (d_pred @ W2.T) * gate
    grad_W1 = X.T @ d_hidden
    grad_b1 = d_hidden.sum(axis=0)
    return loss, (grad_W1, grad_b1, grad_W2, grad_b2)


class MLPRegressor(BaseEstimator, RegressorMixin):
    """One hidden layer, linear output, adaptive mini-batch gradient descent.

    Updates follow the usual first/second-moment scheme (beta 0.9/0.999
    with bias correction), so per-parameter step sizes adapt to gradient
    scale.  The default rectified hidden layer zeroes out inputs far from
    a unit's active half-space, so isolated clusters can be fit without
    disturbing the rest of the surface; ``activation="tanh"`` gives the
    classic saturating variant.  Training runs a fixed epoch budget;
    initialization, batch order and therefore the fitted weights are
    fully determined by ``random_state``.
    """

    def __init__(
        self,
        hidden_units=16,
        learning_rate=1e-3,
        epochs=500,
        batch_size=32,
        activation="relu",
        random_state=0,
    ):
        self.hidden_units = hidden_units
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.activation = activation
        self.random_state = random_state

    def _init_params(self, d, rng):
        h = int(self.hidden_units)
        s1 = np.sqrt(6.0 / (d + h))
        s2 = np.sqrt(6.0 / (h + 1))
        return [
            rng.uniform(-s1, s1, size=(d, h)),
            np.zeros(h),
            rng.uniform(-s2, s2, size=(h, 1)),
            np.zeros(1),
        ]

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.hidden_units < 1 or self.learning_rate <= 0 or self.epochs < 1:
            raise ValueError("hidden_units, learning_rate and epochs must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        n, d = X.shape
        self.n_features_in_ = d
        rng = np.random.default_rng(self.random_state)
        params = self._init_params(d, rng)
        first = [np.zeros_like(p) for p in params]
        second = [np.zeros_like(p) for p in params]
        Y = y.reshape(-1, 1)
        batch = min(int(self.batch_size), n)
        lr = float(self.learning_rate)
        step = 0
        for _ in range(int(self.epochs)):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                sel = order[start : start + batch]
                _, grads = loss_and_grads(params, X[sel], Y[sel], self.activation)
                step += 1
                for i, grad in enumerate(grads):
                    first[i] = 0.9 * first[i] + 0.1 * grad
                    second[i] = 0.999 * second[i] + 0.001 * grad**2
                    m_hat = first[i] / (1.0 - 0.9**step)
                    v_hat = second[i] / (1.0 - 0.999**step)
                    params[i] -= lr * m_hat / (np.sqrt(v_hat) + 1e-8)
        self.weights_ = [p.copy() for p in params]
        self.converged_ = True  # budget-based training, no tolerance target
        self.training_loss_ = float(np.mean((self.predict(X) - y) ** 2))
        self.training_objective_ = self.training_loss_
        return self

    def predict(self, X):
        X = check_n_features(X, self.n_features_in_)
        if X.shape[0] == 0:
            return np.empty(0)
        return _forward(self.weights_, X, self.activation)[2].ravel()
