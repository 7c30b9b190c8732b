"""Trimmed-loss defenses against training-set poisoning.

``TrimDefense`` repeatedly fits a regressor on the lowest-residual subset
of an assumed size; ``IterativeTrimDefense`` searches a grid of assumed
poison rates for the point where the trimmed train loss stops improving
(the kink left behind once every poison row is gone) and returns the trim
result at that rate.

Neither class ever sees provenance information about which rows are
poison; they operate on the data alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone

from .exceptions import TooFewRetained
from .validation import check_X_y


@dataclass(frozen=True)
class DefenseResult:
    """Outcome of one defense run, serializable for audit.

    ``loss_trace`` holds (assumed rate, trimmed train MSE) pairs: a single
    entry for a plain trim run, one entry per evaluated candidate for the
    iterative search.
    """

    retained_indices: np.ndarray
    estimated_epsilon: float
    loss_trace: list
    model: object
    n_total: int
    converged: bool = True
    kink_found: bool | None = None
    iteration_losses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        from .regressors.serialize import model_to_dict

        return {
            "retained_indices": self.retained_indices.tolist(),
            "estimated_epsilon": self.estimated_epsilon,
            "loss_trace": [[float(e), float(l)] for e, l in self.loss_trace],
            "n_total": self.n_total,
            "converged": self.converged,
            "kink_found": self.kink_found,
            "iteration_losses": [float(v) for v in self.iteration_losses],
            "model": model_to_dict(self.model),
        }


def retained_count(n_total: int, epsilon_hat: float) -> int:
    """Rows kept when assuming a poison fraction of ``epsilon_hat``."""
    return int(math.floor(n_total / (1.0 + epsilon_hat)))


def candidate_seed(seed: int, index: int) -> int:
    """Seed for the candidate-``index`` trim run inside an iterative search.

    Exposed so callers can reproduce any single candidate run with a
    direct ``TrimDefense`` call.
    """
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


class TrimDefense(BaseEstimator):
    """Alternating subset selection and refitting on lowest-residual rows.

    Starting from a seeded random subset of size floor(n/(1+epsilon_hat)),
    the defense fits ``estimator`` on the subset, re-ranks all rows by
    squared residual under the fit, keeps the smallest (ties toward lower
    index), and refits, stopping once the subset is stable, the trimmed
    loss improvement falls below ``tol``, or ``max_iter`` rounds elapse.

    Parameters
    ----------
    estimator : regressor
        Any fit/predict regressor; it is cloned before every refit.
    epsilon_hat : float
        Assumed fraction of poisoned rows, in [0, 1).
    max_iter : int
        Selection/refit rounds before giving up.
    tol : float
        Minimum trimmed-loss improvement to keep iterating.
    random_state : int
        Seed for the initial subset.

    Attributes (after ``fit``)
    --------------------------
    retained_indices_ : sorted int array of kept row indices
    model_ : the final fitted estimator
    loss_ : trimmed train MSE of ``model_`` on the kept rows
    iteration_losses_ : trimmed train MSE after every refit
    objective_trace_ : the estimator's own training objective per refit
    converged_ : False when ``max_iter`` ran out
    result_ : the run summarized as a ``DefenseResult``
    """

    def __init__(self, estimator, epsilon_hat=0.1, max_iter=20, tol=1e-9, random_state=0):
        self.estimator = estimator
        self.epsilon_hat = epsilon_hat
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if not 0.0 <= self.epsilon_hat < 1.0:
            raise ValueError("epsilon_hat must lie in [0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        n = X.shape[0]
        k = retained_count(n, self.epsilon_hat)
        if k < 2:
            raise TooFewRetained(f"would retain only {k} of {n} rows")

        rng = np.random.default_rng(self.random_state)
        retained = np.sort(rng.choice(n, size=k, replace=False))
        model = clone(self.estimator).fit(X[retained], y[retained])
        loss = self._subset_mse(model, X, y, retained)
        self.iteration_losses_ = [loss]
        self.objective_trace_ = [float(model.training_objective_)]
        self.converged_ = False

        for _ in range(self.max_iter):
            ranked = np.argsort(
                (y - model.predict(X)) ** 2, kind="stable"
            )[:k]
            new_retained = np.sort(ranked)
            if np.array_equal(new_retained, retained):
                self.converged_ = True
                break
            retained = new_retained
            model = clone(self.estimator).fit(X[retained], y[retained])
            new_loss = self._subset_mse(model, X, y, retained)
            self.iteration_losses_.append(new_loss)
            self.objective_trace_.append(float(model.training_objective_))
            improved_by = loss - new_loss
            loss = new_loss
            if improved_by < self.tol:
                self.converged_ = True
                break

        self.retained_indices_ = retained
        self.model_ = model
        self.loss_ = loss
        self.estimated_epsilon_ = float(self.epsilon_hat)
        self.result_ = DefenseResult(
            retained_indices=retained,
            estimated_epsilon=self.estimated_epsilon_,
            loss_trace=[(self.estimated_epsilon_, loss)],
            model=model,
            n_total=n,
            converged=self.converged_,
            iteration_losses=list(self.iteration_losses_),
        )
        return self

    @staticmethod
    def _subset_mse(model, X, y, indices) -> float:
        err = y[indices] - model.predict(X[indices])
        return float(np.mean(err**2))


class IterativeTrimDefense(BaseEstimator):
    """Trim with an automatic estimate of the poison rate.

    Candidate rates epsilon_max * j / (runs - 1), j = 0..runs-1, are
    evaluated in ascending order with an independent trim run each (the
    candidate seeds come from ``candidate_seed``).  The search stops at
    the first candidate whose trimmed train loss sits within ``threshold``
    of its predecessor's: past the true poison rate the loss curve goes
    flat, so that candidate marks the end of the steep segment.  If no
    pair of consecutive losses comes that close, the defense falls back
    to ``epsilon_max`` and flags it (``kink_found_`` False), preferring
    over-trimming to leaving poison in.

    Attributes (after ``fit``) mirror ``TrimDefense`` plus
    ``kink_found_``, ``loss_trace_`` (per-candidate pairs) and
    ``candidate_models_`` (one fitted model per evaluated candidate,
    useful for diagnostics).
    """

    def __init__(
        self,
        estimator,
        epsilon_max=0.14,
        runs=6,
        threshold=1e-3,
        max_iter=20,
        tol=1e-9,
        random_state=0,
    ):
        self.estimator = estimator
        self.epsilon_max = epsilon_max
        self.runs = runs
        self.threshold = threshold
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def candidates(self) -> np.ndarray:
        return self.epsilon_max * np.arange(self.runs) / (self.runs - 1)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if not 0.0 < self.epsilon_max < 1.0:
            raise ValueError("epsilon_max must lie in (0, 1)")
        if self.runs < 2:
            raise ValueError("need at least 2 runs")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")

        grid = self.candidates()
        self.loss_trace_ = []
        self.candidate_models_ = []
        chosen_idx = None
        prev_loss = None
        for idx, eps_hat in enumerate(grid):
            run = self._trim_at(float(eps_hat), idx).fit(X, y)
            self.loss_trace_.append((float(eps_hat), run.loss_))
            self.candidate_models_.append(run.model_)
            if prev_loss is not None and abs(run.loss_ - prev_loss) < self.threshold:
                chosen_idx = idx
                chosen_run = run
                break
            prev_loss = run.loss_

        self.kink_found_ = chosen_idx is not None
        if chosen_idx is None:
            # no flat pair: fall back to the largest candidate, whose run
            # finished the loop above
            chosen_idx = len(grid) - 1
            chosen_run = run

        self.estimated_epsilon_ = float(grid[chosen_idx])
        self.retained_indices_ = chosen_run.retained_indices_
        self.model_ = chosen_run.model_
        self.loss_ = chosen_run.loss_
        self.converged_ = chosen_run.converged_
        self.iteration_losses_ = chosen_run.iteration_losses_
        self.result_ = DefenseResult(
            retained_indices=self.retained_indices_,
            estimated_epsilon=self.estimated_epsilon_,
            loss_trace=list(self.loss_trace_),
            model=self.model_,
            n_total=X.shape[0],
            converged=self.converged_,
            kink_found=self.kink_found_,
            iteration_losses=list(self.iteration_losses_),
        )
        return self

    def _trim_at(self, eps_hat: float, index: int) -> TrimDefense:
        return TrimDefense(
            estimator=self.estimator,
            epsilon_hat=eps_hat,
            max_iter=self.max_iter,
            tol=self.tol,
            random_state=candidate_seed(self.random_state, index),
        )


DEFENSES = ("none", "trim", "itrim")
