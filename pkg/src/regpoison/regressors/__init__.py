"""Seven regressors behind one fit/predict surface, plus grid search.

Every estimator follows the scikit-learn protocol (``fit``/``predict``,
``get_params``/``set_params``) and sets, after fitting:

* ``training_loss_``       unregularized MSE on the fit data
* ``training_objective_``  the exact quantity the solver minimizes
* ``converged_``           False when an iteration budget ran out
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import KernelRidgeRegressor, SupportVectorRegressor, rbf_kernel
from .linear import (
    ElasticNetRegressor,
    HuberRegressor,
    LassoRegressor,
    RidgeRegressor,
)
from .mlp import MLPRegressor
from .search import DEFAULT_GRIDS, HyperGrid, default_grid, grid_search

REGRESSOR_KINDS = {
    "ridge": RidgeRegressor,
    "lasso": LassoRegressor,
    "elasticnet": ElasticNetRegressor,
    "huber": HuberRegressor,
    "kernelridge": KernelRidgeRegressor,
    "svr": SupportVectorRegressor,
    "mlp": MLPRegressor,
}

_POSITIVE_PARAMS = {"alpha", "gamma", "C", "delta", "tube", "learning_rate"}


def canonical_kind(kind: str) -> str:
    key = kind.replace("_", "").replace("-", "").lower()
    if key not in REGRESSOR_KINDS:
        raise ValueError(
            f"unknown regressor kind {kind!r}; expected one of {sorted(REGRESSOR_KINDS)}"
        )
    return key


@dataclass(frozen=True)
class RegressorSpec:
    """A regressor kind with concrete hyperparameters and an init seed."""

    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        for name, value in self.hyperparams.items():
            if name in _POSITIVE_PARAMS and not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
            if name == "l1_ratio" and not 0.0 <= value <= 1.0:
                raise ValueError(f"l1_ratio must lie in [0, 1], got {value}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparams": dict(self.hyperparams), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorSpec":
        return cls(d["kind"], dict(d.get("hyperparams", {})), int(d.get("seed", 0)))


def make_regressor(spec: RegressorSpec | str, **hyperparams):
    """Instantiate the estimator described by a spec (or a kind plus kwargs)."""
    if isinstance(spec, str):
        spec = RegressorSpec(spec, hyperparams)
    cls = REGRESSOR_KINDS[spec.kind]
    kwargs = dict(spec.hyperparams)
    if spec.kind == "mlp":
        kwargs.setdefault("random_state", spec.seed)
    return cls(**kwargs)


def fit_regressor(spec: RegressorSpec, X, y):
    return make_regressor(spec).fit(X, y)


def train_loss(model, X, y) -> float:
    """MSE of a fitted model's predictions against the given targets."""
    err = model.predict(X) - np.asarray(y, dtype=np.float64).ravel()
    return float(np.mean(err**2))


__all__ = [
    "DEFAULT_GRIDS",
    "ElasticNetRegressor",
    "HuberRegressor",
    "HyperGrid",
    "KernelRidgeRegressor",
    "LassoRegressor",
    "MLPRegressor",
    "REGRESSOR_KINDS",
    "RegressorSpec",
    "RidgeRegressor",
    "SupportVectorRegressor",
    "canonical_kind",
    "default_grid",
    "fit_regressor",
    "grid_search",
    "make_regressor",
    "rbf_kernel",
    "train_loss",
]
