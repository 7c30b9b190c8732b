"""Black-box poisoning attacks.

Both attacks see only a substitute sample from the data distribution,
never the victim's train set.  ``flip_attack`` needs nothing else;
``statp_attack`` additionally queries a prediction oracle (a deployed
model or a surrogate the attacker trained on the substitute set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeasibilityDomain
from .exceptions import NotPositiveDefinite, OracleFailure, SubstituteTooSmall
from .validation import frozen


@dataclass(frozen=True)
class AttackConfig:
    """Poison budget and target-value bounds for one attack run.

    ``epsilon`` is the poison fraction relative to the victim train size
    ``target_n``; the attacker contributes ``ceil(epsilon * target_n)``
    rows with targets confined to ``domain``.
    """

    epsilon: float
    target_n: int
    domain: FeasibilityDomain = FeasibilityDomain()
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.target_n < 1:
            raise ValueError("target_n must be at least 1")

    @property
    def poison_count(self) -> int:
        # tolerance guards against float noise like 0.07 * 100 = 7.000000000000001
        return max(1, math.ceil(self.epsilon * self.target_n - 1e-9))


@dataclass(frozen=True)
class PoisonSet:
    """Attacker-crafted rows; every target sits on a domain endpoint."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", frozen(self.features))
        object.__setattr__(self, "targets", frozen(self.targets).ravel())

    @property
    def size(self) -> int:
        return self.targets.shape[0]

    @classmethod
    def empty(cls, d: int) -> "PoisonSet":
        return cls(np.empty((0, d)), np.empty(0))


def flip_attack(substitute: Dataset, config: AttackConfig) -> PoisonSet:
    """Copy the most-flippable substitute rows with their targets flipped.

    For each substitute row the attack measures how far its target could
    travel to the opposite end of the feasibility domain, keeps the rows
    with the largest travel (ties resolved toward lower row index), and
    flips each kept target to the endpoint on the far side of the domain
    midpoint.  Features are copied untouched, which is what makes the
    resulting rows contradict nearby clean data.
    """
    count = config.poison_count
    if substitute.n < count:
        raise SubstituteTooSmall(
            f"substitute has {substitute.n} rows, need {count}"
        )
    dom = config.domain
    y = substitute.targets
    gap = np.maximum(y - dom.gamma_min, dom.gamma_max - y)
    selected = np.argsort(-gap, kind="stable")[:count]
    flipped = np.where(y[selected] > dom.midpoint, dom.gamma_min, dom.gamma_max)
    return PoisonSet(substitute.features[selected], flipped)


def sample_gaussian(mean, covariance, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` multivariate-normal samples deterministically.

    The covariance gets a small relative ridge on its diagonal before
    factorization so that rank-deficient estimates still factor; if it
    still is not positive definite the draw fails loudly.
    """
    mean = np.asarray(mean, dtype=np.float64).ravel()
    cov = np.asarray(covariance, dtype=np.float64)
    if count < 1:
        raise ValueError("count must be positive")
    if cov.shape != (mean.size, mean.size):
        raise ValueError("covariance shape does not match mean")
    if not np.allclose(cov, cov.T):
        raise ValueError("covariance must be symmetric")
    ridge = 1e-9 * (np.trace(cov) / mean.size or 1.0)
    try:
        chol = np.linalg.cholesky(cov + ridge * np.eye(mean.size))
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefinite(str(err)) from err
    z = np.random.default_rng(seed).standard_normal((count, mean.size))
    return mean + z @ chol.T


def statp_attack(substitute: Dataset, config: AttackConfig, model_query) -> PoisonSet:
    """Corner-sampling attack driven by distribution statistics plus queries.

    Samples feature vectors from a Gaussian fit to the substitute
    features, rounds every coordinate to the nearer of {0, 1}, queries
    the prediction oracle on the rounded points, and targets each row at
    the domain endpoint opposite the prediction (predictions at or below
    the midpoint flip up, above it flip down).
    """
    if substitute.n < 2:
        raise SubstituteTooSmall("need at least 2 substitute rows to estimate moments")
    dom = config.domain
    mean = substitute.features.mean(axis=0)
    cov = np.cov(substitute.features, rowvar=False)
    cov = np.atleast_2d(cov)
    raw = sample_gaussian(mean, cov, config.poison_count, config.seed)
    corners = np.where(raw >= 0.5, 1.0, 0.0)
    try:
        preds = np.asarray(model_query(corners), dtype=np.float64).ravel()
    except Exception as err:
        raise OracleFailure(f"model query failed: {err}") from err
    if preds.shape[0] != corners.shape[0] or not np.isfinite(preds).all():
        raise OracleFailure("model query returned malformed predictions")
    targets = np.where(preds <= dom.midpoint, dom.gamma_max, dom.gamma_min)
    return PoisonSet(corners, targets)


ATTACKS = {"flip": flip_attack, "statp": statp_attack}


def run_attack(name: str, substitute: Dataset, config: AttackConfig, model_query=None) -> PoisonSet:
    """Dispatch by attack name; ``statp`` defaults to a surrogate oracle.

    When no oracle is supplied for ``statp``, a kernel-ridge surrogate is
    fit on the substitute set, which keeps the attack inside the
    substitute-only threat model.
    """
    key = name.lower()
    if key == "flip":
        return flip_attack(substitute, config)
    if key == "statp":
        if model_query is None:
            from .regressors import KernelRidgeRegressor

            surrogate = KernelRidgeRegressor(alpha=1e-3, gamma=1.0).fit(
                substitute.features, substitute.targets
            )
            model_query = surrogate.predict
        return statp_attack(substitute, config, model_query)
    raise ValueError(f"unknown attack {name!r}; expected one of {sorted(ATTACKS)}")
