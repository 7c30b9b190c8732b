"""Dataset loading, min-max scaling, splitting, and composition.

Every operation here is a pure function of its inputs and an explicit
seed, so repeated runs reproduce byte-identical datasets.  All container
types hold read-only arrays and are safe to share across workers.

The split fractions follow the experiment protocol used throughout the
package: a substitute set of 25% of the rows (what a black-box attacker
is assumed to hold), then 60% train and the remaining 15% test.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import (
    ConstantTargetColumn,
    DimensionMismatch,
    EmptyAfterFiltering,
    MissingFile,
    MissingTargetColumn,
    TooFewRows,
)
from .validation import as_matrix, frozen

log = logging.getLogger(__name__)

SUBSTITUTE_FRACTION = 0.25
TRAIN_FRACTION = 0.60  # 0.75 * 0.8 of the full data


@dataclass(frozen=True)
class RawDataset:
    """Unscaled numeric data as loaded from disk or a generator.

    ``column_names`` lists the d feature names followed by the target
    name.  ``dropped_rows`` counts rows discarded at ingestion because
    they contained unparseable or non-finite cells.
    """

    features: np.ndarray
    targets: np.ndarray
    name: str = "dataset"
    column_names: tuple[str, ...] = ()
    dropped_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "features", frozen(as_matrix(self.features)))
        object.__setattr__(self, "targets", frozen(self.targets).ravel())
        if self.features.shape[0] != self.targets.shape[0]:
            raise DimensionMismatch(
                f"{self.features.shape[0]} feature rows vs "
                f"{self.targets.shape[0]} targets"
            )
        if self.n == 0 or self.d == 0:
            raise EmptyAfterFiltering(f"dataset {self.name!r} is empty")
        if not (np.isfinite(self.features).all() and np.isfinite(self.targets).all()):
            raise ValueError("non-finite values must be filtered before construction")
        if not self.column_names:
            names = tuple(f"x{j}" for j in range(self.d)) + ("y",)
            object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ScalingParams:
    """Per-column min/max of features plus target (target is the last entry)."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "minimum", frozen(self.minimum).ravel())
        object.__setattr__(self, "maximum", frozen(self.maximum).ravel())
        if self.minimum.shape != self.maximum.shape:
            raise DimensionMismatch("min/max length mismatch")
        if np.any(self.minimum > self.maximum):
            raise ValueError("column minimum exceeds maximum")

    @property
    def n_columns(self) -> int:
        return self.minimum.shape[0]

    @property
    def constant_columns(self) -> np.ndarray:
        """Boolean mask of columns whose min equals max; these map to 0.0."""
        return self.minimum == self.maximum

    @property
    def target_range(self) -> tuple[float, float]:
        return float(self.minimum[-1]), float(self.maximum[-1])

    def to_dict(self) -> dict:
        return {"minimum": self.minimum.tolist(), "maximum": self.maximum.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(np.asarray(d["minimum"]), np.asarray(d["maximum"]))


@dataclass(frozen=True)
class Dataset:
    """Feature matrix and target vector scaled into the unit interval."""

    features: np.ndarray
    targets: np.ndarray
    scaling: ScalingParams | None = None
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "features", frozen(as_matrix(self.features)))
        object.__setattr__(self, "targets", frozen(self.targets).ravel())
        if self.features.shape[0] != self.targets.shape[0]:
            raise DimensionMismatch("row count mismatch between features and targets")
        for arr in (self.features, self.targets):
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise ValueError("scaled values must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def take(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(
            self.features[indices],
            self.targets[indices],
            scaling=self.scaling,
            name=name or self.name,
        )


@dataclass(frozen=True)
class FeasibilityDomain:
    """Closed interval of target values an attacker can use without suspicion."""

    gamma_min: float = 0.0
    gamma_max: float = 1.0

    def __post_init__(self):
        if not self.gamma_min < self.gamma_max:
            from .exceptions import DegenerateDomain

            raise DegenerateDomain(
                f"invalid domain [{self.gamma_min}, {self.gamma_max}]"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.gamma_min + self.gamma_max)


@dataclass(frozen=True)
class DataSplits:
    """Disjoint substitute/train/test partition of one scaled dataset."""

    substitute: Dataset
    train: Dataset
    test: Dataset
    seed: int
    substitute_indices: np.ndarray = field(repr=False, default=None)
    train_indices: np.ndarray = field(repr=False, default=None)
    test_indices: np.ndarray = field(repr=False, default=None)

    def sidecar(self) -> dict:
        """JSON-ready record sufficient to reproduce this split exactly."""
        d = {
            "seed": int(self.seed),
            "substitute_indices": self.substitute_indices.tolist(),
            "train_indices": self.train_indices.tolist(),
            "test_indices": self.test_indices.tolist(),
        }
        if self.train.scaling is not None:
            d["scaling"] = self.train.scaling.to_dict()
        return d


def load_csv(path, target_column) -> RawDataset:
    """Load a numeric regression dataset from a CSV file with a header row.

    ``target_column`` selects the target by name or zero-based position.
    Columns that contain no parseable numbers at all are treated as
    non-numeric and dropped; afterwards any row with an unparseable or
    non-finite cell is dropped and counted.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    frame = pd.read_csv(path)
    if frame.shape[1] == 0:
        raise EmptyAfterFiltering(f"{path} has no columns")

    if isinstance(target_column, int) or (
        isinstance(target_column, str) and target_column.lstrip("-").isdigit()
    ):
        idx = int(target_column)
        if idx < 0:
            idx += frame.shape[1]
        if not 0 <= idx < frame.shape[1]:
            raise MissingTargetColumn(f"column index {target_column} out of range")
        target_name = frame.columns[idx]
    else:
        if target_column not in frame.columns:
            raise MissingTargetColumn(str(target_column))
        target_name = target_column

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    keep_cols = [c for c in numeric.columns if numeric[c].notna().any()]
    if target_name not in keep_cols:
        raise EmptyAfterFiltering(f"target column {target_name!r} has no numeric rows")
    numeric = numeric[keep_cols].replace([np.inf, -np.inf], np.nan)

    before = len(numeric)
    numeric = numeric.dropna(axis=0)
    dropped = before - len(numeric)
    if dropped:
        log.info("%s: dropped %d rows with non-numeric or non-finite cells", path, dropped)
    if len(numeric) == 0:
        raise EmptyAfterFiltering(f"{path}: no complete numeric rows remain")

    y = numeric.pop(target_name).to_numpy(dtype=np.float64)
    X = numeric.to_numpy(dtype=np.float64)
    if X.shape[1] == 0:
        raise EmptyAfterFiltering(f"{path}: no numeric feature columns remain")
    names = tuple(numeric.columns) + (target_name,)
    return RawDataset(X, y, name=path.stem, column_names=names, dropped_rows=dropped)


def fit_scaler(raw: RawDataset) -> ScalingParams:
    """Compute per-column min/max over features and target."""
    cols = np.column_stack([raw.features, raw.targets])
    return ScalingParams(cols.min(axis=0), cols.max(axis=0))


def apply_scaler(raw: RawDataset, params: ScalingParams) -> Dataset:
    """Map every column into [0, 1]; out-of-range values clamp, constant columns map to 0."""
    if raw.d + 1 != params.n_columns:
        raise DimensionMismatch(
            f"{raw.d + 1} columns vs scaler with {params.n_columns}"
        )
    cols = np.column_stack([raw.features, raw.targets])
    span = params.maximum - params.minimum
    safe_span = np.where(span == 0.0, 1.0, span)
    scaled = np.clip((cols - params.minimum) / safe_span, 0.0, 1.0)
    scaled[:, params.constant_columns] = 0.0
    return Dataset(scaled[:, :-1], scaled[:, -1], scaling=params, name=raw.name)


def invert_target(params: ScalingParams, scaled) -> np.ndarray | float:
    """Map scaled target values back to original units."""
    lo, hi = params.target_range
    if lo == hi:
        raise ConstantTargetColumn("target column is constant; inversion undefined")
    out = np.asarray(scaled, dtype=np.float64) * (hi - lo) + lo
    return float(out) if out.ndim == 0 else out


def split(data: Dataset, seed: int) -> DataSplits:
    """Partition into substitute (25%), train (60%) and test (rest) by a seeded shuffle."""
    n = data.n
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_sub = int(np.floor(SUBSTITUTE_FRACTION * n))
    n_train = int(np.floor(TRAIN_FRACTION * n))
    sub_idx = np.sort(order[:n_sub])
    train_idx = np.sort(order[n_sub : n_sub + n_train])
    test_idx = np.sort(order[n_sub + n_train :])
    return DataSplits(
        substitute=data.take(sub_idx, f"{data.name}/substitute"),
        train=data.take(train_idx, f"{data.name}/train"),
        test=data.take(test_idx, f"{data.name}/test"),
        seed=int(seed),
        substitute_indices=sub_idx,
        train_indices=train_idx,
        test_indices=test_idx,
    )


def subsample(raw: RawDataset, cap: int, seed: int) -> RawDataset:
    """Uniformly subsample to at most ``cap`` rows; identity when already small enough."""
    if cap < 1:
        raise ValueError("cap must be positive")
    if raw.n <= cap:
        return raw
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(raw.n, size=cap, replace=False))
    return RawDataset(
        raw.features[keep],
        raw.targets[keep],
        name=raw.name,
        column_names=raw.column_names,
        dropped_rows=raw.dropped_rows,
    )


def append_and_shuffle(train: Dataset, poison, seed: int):
    """Append poison rows to a train set and shuffle with a seeded permutation.

    Returns ``(dataset, is_poison)`` where ``is_poison`` is a boolean
    provenance mask aligned with the shuffled rows.  The mask exists only
    so evaluation code can measure how much true poison a defense
    removed; defenses never receive it.
    """
    if poison.size and poison.features.shape[1] != train.d:
        raise DimensionMismatch(
            f"poison has {poison.features.shape[1]} features, train has {train.d}"
        )
    if poison.size:
        feats = np.vstack([train.features, poison.features])
        targs = np.concatenate([train.targets, poison.targets])
    else:
        feats, targs = train.features, train.targets
    mask = np.zeros(train.n + poison.size, dtype=bool)
    mask[train.n :] = True
    order = np.random.default_rng(seed).permutation(mask.shape[0])
    mixed = Dataset(
        feats[order], targs[order], scaling=train.scaling, name=f"{train.name}+poison"
    )
    return mixed, mask[order]


def write_dataset_csv(data, path, column_names=None) -> None:
    """Write features+target back out in the same CSV shape they were loaded from."""
    names = list(column_names or (f"x{j}" for j in range(data.features.shape[1])))
    if column_names is None:
        names.append("y")
    frame = pd.DataFrame(
        np.column_stack([data.features, data.targets]), columns=names
    )
    frame.to_csv(path, index=False)


def save_splits(splits: DataSplits, out_dir) -> None:
    """Write the three split CSVs plus a sidecar JSON for exact reproduction."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for part in ("substitute", "train", "test"):
        write_dataset_csv(getattr(splits, part), out / f"{part}.csv")
    (out / "splits.json").write_text(json.dumps(splits.sidecar(), indent=2))
