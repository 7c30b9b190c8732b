"""Cross-validated grid search over regressor hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ..exceptions import TooFewRows
from ..validation import check_X_y


@dataclass(frozen=True)
class HyperGrid:
    """Candidate values per hyperparameter plus the CV fold count.

    Grid points are enumerated as the cartesian product of the candidate
    lists in the order the keys appear; the enumeration index breaks
    score ties (lowest index wins).
    """

    params: dict
    folds: int = 3

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        for key, values in self.params.items():
            if len(values) == 0:
                raise ValueError(f"empty candidate list for {key!r}")

    def points(self) -> list[dict]:
        keys = list(self.params)
        return [dict(zip(keys, combo)) for combo in product(*self.params.values())]

    def to_dict(self) -> dict:
        return {"params": {k: list(v) for k, v in self.params.items()}, "folds": self.folds}

    @classmethod
    def from_dict(cls, d: dict) -> "HyperGrid":
        return cls(params=dict(d["params"]), folds=int(d.get("folds", 3)))


_ALPHAS = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
_GAMMAS = (0.1, 1.0, 10.0)

DEFAULT_GRIDS = {
    "ridge": {"alpha": _ALPHAS},
    "lasso": {"alpha": _ALPHAS},
    "elasticnet": {"alpha": _ALPHAS, "l1_ratio": (0.25, 0.5, 0.75)},
    "huber": {"alpha": _ALPHAS, "delta": (0.1, 1.0)},
    "kernelridge": {"alpha": _ALPHAS, "gamma": _GAMMAS},
    "svr": {"C": (0.1, 1.0, 10.0), "gamma": _GAMMAS, "tube": (0.01,)},
    "mlp": {"hidden_units": (16, 64)},
}


def default_grid(kind: str, folds: int = 3) -> HyperGrid:
    from . import canonical_kind

    return HyperGrid(params=dict(DEFAULT_GRIDS[canonical_kind(kind)]), folds=folds)


def _fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    return np.array_split(order, folds)


def grid_search(kind: str, grid: HyperGrid, X, y, seed: int = 0):
    """Pick the grid point with the lowest mean validation MSE.

    The fold partition is a seeded shuffle, identical for every grid
    point; ties go to the earliest point in enumeration order.
    """
    from . import RegressorSpec, make_regressor

    X, y = check_X_y(X, y)
    n = X.shape[0]
    if n < grid.folds:
        raise TooFewRows(f"{n} rows cannot form {grid.folds} folds")
    folds = _fold_indices(n, grid.folds, seed)
    points = grid.points()
    scores = np.empty(len(points))
    for p_idx, params in enumerate(points):
        fold_mse = []
        for held_out in folds:
            train_mask = np.ones(n, dtype=bool)
            train_mask[held_out] = False
            model = make_regressor(RegressorSpec(kind, params, seed=seed))
            model.fit(X[train_mask], y[train_mask])
            err = model.predict(X[held_out]) - y[held_out]
            fold_mse.append(float(np.mean(err**2)))
        scores[p_idx] = np.mean(fold_mse)
    best = int(np.argmin(scores))
    return RegressorSpec(kind, points[best], seed=seed)
