"""Evaluation metrics: MSE, MAE (optionally in original units), and the
acceptable-prediction rate, plus the clean/poisoned/defended comparison rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ScalingParams, invert_target
from .validation import check_paired_vectors


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    mae_original_units: float
    acceptable_rate_pct: float
    n_test: int

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mae_original_units": self.mae_original_units,
            "acceptable_rate_pct": self.acceptable_rate_pct,
            "n_test": self.n_test,
        }


def mse(y_true, y_pred) -> float:
    y_true, y_pred = check_paired_vectors(y_true, y_pred)
    return float(np.mean((y_true - y_pred) ** 2))


def mae(y_true, y_pred, scaling: ScalingParams | None = None) -> float:
    """Mean absolute error; with ``scaling`` both vectors are mapped back to
    original target units first."""
    y_true, y_pred = check_paired_vectors(y_true, y_pred)
    if scaling is not None:
        y_true = invert_target(scaling, y_true)
        y_pred = invert_target(scaling, y_pred)
    return float(np.mean(np.abs(y_true - y_pred)))


def acceptable_rate(y_true, y_pred, band: float = 0.2) -> float:
    """Percentage of predictions within ``band`` (relative) of the true value.

    A zero true value only counts as acceptable when the prediction is
    exactly zero, since a relative band is undefined there.
    """
    y_true, y_pred = check_paired_vectors(y_true, y_pred)
    ok = np.abs(y_pred - y_true) <= band * np.abs(y_true)
    ok[y_true == 0.0] = y_pred[y_true == 0.0] == 0.0
    return float(100.0 * np.mean(ok))


def evaluate_predictions(
    y_true, y_pred, scaling: ScalingParams | None = None, band: float = 0.2
) -> MetricsReport:
    """Bundle the three metrics for one test set.

    MSE is computed in the units given (scaled, in the standard pipeline);
    MAE and the acceptable rate use original units when scaling is known.
    """
    y_true, y_pred = check_paired_vectors(y_true, y_pred)
    if scaling is not None:
        yt, yp = invert_target(scaling, y_true), invert_target(scaling, y_pred)
    else:
        yt, yp = y_true, y_pred
    return MetricsReport(
        mse=mse(y_true, y_pred),
        mae_original_units=float(np.mean(np.abs(yt - yp))),
        acceptable_rate_pct=acceptable_rate(yt, yp, band=band),
        n_test=int(y_true.shape[0]),
    )


def ratio_report(
    clean: MetricsReport,
    poisoned: MetricsReport,
    defended: MetricsReport | None = None,
) -> dict:
    """Relative damage/repair numbers against the clean baseline.

    MAE ratios are poisoned/clean and defended/clean; the acceptable-rate
    columns report the percentage *decrease* relative to clean, so negative
    values mean the rate improved.  Ratios against a zero clean metric are
    undefined and reported as ``None``.
    """

    def _ratio(a: float, b: float) -> float | None:
        return None if b == 0.0 else a / b

    def _decrease(rate: float, clean_rate: float) -> float | None:
        return None if clean_rate == 0.0 else 100.0 * (clean_rate - rate) / clean_rate

    row = {
        "mae_ratio_poisoned": _ratio(poisoned.mae_original_units, clean.mae_original_units),
        "mse_ratio_poisoned": _ratio(poisoned.mse, clean.mse),
        "acceptable_decrease_poisoned": _decrease(
            poisoned.acceptable_rate_pct, clean.acceptable_rate_pct
        ),
        "mae_ratio_defended": None,
        "mse_ratio_defended": None,
        "acceptable_decrease_defended": None,
    }
    if defended is not None:
        row["mae_ratio_defended"] = _ratio(
            defended.mae_original_units, clean.mae_original_units
        )
        row["mse_ratio_defended"] = _ratio(defended.mse, clean.mse)
        row["acceptable_decrease_defended"] = _decrease(
            defended.acceptable_rate_pct, clean.acceptable_rate_pct
        )
    return row


def lower_median(values) -> float:
    """Median that returns the lower middle element for even-length input."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("empty input")
    return float(v[(v.size - 1) // 2])
