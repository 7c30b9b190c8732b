"""Experiment orchestration: poison, defend, fit, and evaluate across a
grid of datasets, regressors, poison rates, attacks, and defenses.

The grid decomposes into independent jobs (one per poisoned-train-set and
regressor) whose random streams are derived injectively from the master
seed and the cell coordinates, so parallel and sequential execution give
identical numbers and reruns are reproducible.  Row provenance about
which rows are poison is consumed only by evaluation columns, never by a
defense.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacks import AttackConfig, PoisonSet, run_attack
from .data import (
    Dataset,
    append_and_shuffle,
    apply_scaler,
    fit_scaler,
    load_csv,
    split,
    subsample,
)
from .defenses import IterativeTrimDefense, TrimDefense
from .exceptions import ConfigInvalid, DatasetUnavailable, MissingCells, MissingFile
from .metrics import MetricsReport, evaluate_predictions, lower_median, ratio_report
from .regressors import (
    HyperGrid,
    canonical_kind,
    default_grid,
    grid_search,
    make_regressor,
)
from .synth import make_synthetic

WORKERS_ENV_VAR = "REGPOISON_WORKERS"

DEFAULT_EPSILONS = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10)

REPORT_COLUMNS = [
    "dataset",
    "regressor",
    "attack",
    "defense",
    "epsilon",
    "status",
    "error",
    "n_train",
    "n_poison",
    "n_test",
    "spec",
    "mse",
    "mae_original",
    "acceptable_rate_pct",
    "clean_mse",
    "mse_ratio",
    "mae_ratio",
    "acceptable_decrease",
    "defense_estimated_epsilon",
    "defense_kink_found",
    "defense_converged",
    "defense_retained",
    "poison_removed_pct",
    "cell_id",
    "wall_time_s",
]


@dataclass(frozen=True)
class TrimSettings:
    epsilon_hat: float = 0.14
    max_iter: int = 20
    tol: float = 1e-9


@dataclass(frozen=True)
class ITrimSettings:
    epsilon_max: float = 0.14
    runs: int = 6
    threshold: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run depends on, loadable from JSON."""

    datasets: tuple
    regressors: tuple = ("ridge",)
    epsilons: tuple = DEFAULT_EPSILONS
    attacks: tuple = ("flip",)
    defenses: tuple = ("none",)
    subsample_cap: int = 10000
    cv_folds: int = 3
    grids: dict = field(default_factory=dict)
    trim: TrimSettings = TrimSettings()
    itrim: ITrimSettings = ITrimSettings()
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.datasets:
            raise ConfigInvalid("at least one dataset is required")
        for seq, name in (
            (self.regressors, "regressors"),
            (self.epsilons, "epsilons"),
            (self.attacks, "attacks"),
            (self.defenses, "defenses"),
        ):
            if not seq:
                raise ConfigInvalid(f"{name} must be non-empty")
        if list(self.epsilons) != sorted(self.epsilons):
            raise ConfigInvalid("epsilons must be sorted ascending")
        for eps in self.epsilons:
            if not 0.0 <= eps < 1.0:
                raise ConfigInvalid(f"epsilon {eps} outside [0, 1)")
        for att in self.attacks:
            if att not in ("flip", "statp"):
                raise ConfigInvalid(f"unknown attack {att!r}")
        for d in self.defenses:
            if d not in ("none", "trim", "itrim"):
                raise ConfigInvalid(f"unknown defense {d!r}")
        try:
            object.__setattr__(
                self, "regressors", tuple(canonical_kind(k) for k in self.regressors)
            )
            object.__setattr__(
                self,
                "grids",
                {canonical_kind(k): dict(v) for k, v in self.grids.items()},
            )
        except ValueError as err:
            raise ConfigInvalid(str(err)) from err

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "datasets",
            "regressors",
            "epsilons",
            "attacks",
            "defenses",
            "subsample_cap",
            "cv_folds",
            "grids",
            "trim",
            "itrim",
            "seed",
            "workers",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        kwargs["datasets"] = tuple(
            tuple(sorted(d.items())) if isinstance(d, dict) else d
            for d in raw["datasets"]
        )
        for key in ("regressors", "epsilons", "attacks", "defenses"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "trim" in kwargs:
            kwargs["trim"] = TrimSettings(**kwargs["trim"])
        if "itrim" in kwargs:
            kwargs["itrim"] = ITrimSettings(**kwargs["itrim"])
        try:
            return cls(**kwargs)
        except TypeError as err:
            raise ConfigInvalid(str(err)) from err

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigInvalid(f"config file {path} does not exist")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ConfigInvalid(f"config is not valid JSON: {err}") from err
        return cls.from_dict(raw)


def derive_seed(master: int, *coords: int) -> int:
    """Injective (per coordinate tuple) child seed of the master seed."""
    return int(np.random.SeedSequence((int(master),) + tuple(int(c) for c in coords)).generate_state(1)[0])


def _dataset_entry(entry) -> dict:
    d = dict(entry) if not isinstance(entry, dict) else entry
    if "path" not in d and "synthetic" not in d:
        raise ConfigInvalid(f"dataset entry needs 'path' or 'synthetic': {d}")
    return d


def prepare_dataset(entry, cap: int, seed: int):
    """Load or generate, subsample, scale, and split one dataset."""
    d = _dataset_entry(entry)
    if "path" in d:
        raw = load_csv(d["path"], d.get("target_column", -1))
        if "name" in d:
            raw = type(raw)(
                raw.features, raw.targets, name=d["name"], column_names=raw.column_names
            )
    else:
        raw = make_synthetic(
            d["synthetic"],
            n=int(d.get("n", 2000)),
            d=int(d.get("d", 5)),
            noise=float(d.get("noise", 0.05)),
            seed=derive_seed(seed, 0),
        )
    raw = subsample(raw, cap, derive_seed(seed, 1))
    scaled = apply_scaler(raw, fit_scaler(raw))
    return split(scaled, derive_seed(seed, 2))


@dataclass
class Scenario:
    """One poisoned train set: a dataset under one attack at one rate."""

    dataset_name: str
    attack: str
    epsilon: float
    train: Dataset
    is_poison: np.ndarray
    test: Dataset
    n_poison: int


def build_scenario(splits, dataset_name, attack, epsilon, seed) -> Scenario:
    if epsilon > 0.0:
        cfg = AttackConfig(
            epsilon=epsilon, target_n=splits.train.n, seed=derive_seed(seed, 0)
        )
        poison = run_attack(attack, splits.substitute, cfg)
        label = attack
    else:
        poison = PoisonSet.empty(splits.train.d)
        label = "none"
    train, mask = append_and_shuffle(splits.train, poison, derive_seed(seed, 1))
    return Scenario(
        dataset_name=dataset_name,
        attack=label,
        epsilon=float(epsilon),
        train=train,
        is_poison=mask,
        test=splits.test,
        n_poison=poison.size,
    )


def _grid_for(config: ExperimentConfig, kind: str) -> HyperGrid:
    if kind in config.grids:
        return HyperGrid(params=dict(config.grids[kind]), folds=config.cv_folds)
    return default_grid(kind, folds=config.cv_folds)


def _metrics(model, test: Dataset) -> MetricsReport:
    return evaluate_predictions(
        test.targets, model.predict(test.features), scaling=test.scaling
    )


def _metric_cols(report: MetricsReport) -> dict:
    return {
        "mse": report.mse,
        "mae_original": report.mae_original_units,
        "acceptable_rate_pct": report.acceptable_rate_pct,
    }


def run_job(scenario: Scenario, kind: str, defenses, config: ExperimentConfig, seed: int):
    """Grid-search and fit one regressor on one scenario, then run each
    requested defense with the same hyperparameters.  Returns row dicts."""
    rows = []
    base = {
        "dataset": scenario.dataset_name,
        "regressor": kind,
        "attack": scenario.attack,
        "epsilon": scenario.epsilon,
        "n_train": scenario.train.n,
        "n_poison": scenario.n_poison,
        "n_test": scenario.test.n,
    }
    t0 = time.perf_counter()
    try:
        spec = grid_search(
            kind,
            _grid_for(config, kind),
            scenario.train.features,
            scenario.train.targets,
            seed=derive_seed(seed, 0),
        )
        model = make_regressor(spec).fit(scenario.train.features, scenario.train.targets)
        report = _metrics(model, scenario.test)
    except Exception as err:  # the baseline fit failed: fail every cell of the job
        for defense in defenses:
            row = dict(
                base,
                defense=defense,
                status="failed",
                error=f"{type(err).__name__}: {err}",
                wall_time_s=time.perf_counter() - t0,
            )
            rows.append(dict(row, cell_id=_cell_id(row)))
        return rows

    row = dict(
        base,
        defense="none",
        status="done",
        error="",
        spec=json.dumps(spec.to_dict(), sort_keys=True),
        wall_time_s=time.perf_counter() - t0,
        **_metric_cols(report),
    )
    rows.append(dict(row, cell_id=_cell_id(row)))

    for defense in defenses:
        if defense == "none":
            continue
        t1 = time.perf_counter()
        drow = dict(base, defense=defense, spec=json.dumps(spec.to_dict(), sort_keys=True))
        try:
            if defense == "trim":
                guard = TrimDefense(
                    make_regressor(spec),
                    epsilon_hat=config.trim.epsilon_hat,
                    max_iter=config.trim.max_iter,
                    tol=config.trim.tol,
                    random_state=derive_seed(seed, 1),
                )
            else:
                guard = IterativeTrimDefense(
                    make_regressor(spec),
                    epsilon_max=config.itrim.epsilon_max,
                    runs=config.itrim.runs,
                    threshold=config.itrim.threshold,
                    max_iter=config.trim.max_iter,
                    tol=config.trim.tol,
                    random_state=derive_seed(seed, 2),
                )
            guard.fit(scenario.train.features, scenario.train.targets)
            dreport = _metrics(guard.model_, scenario.test)
            drow.update(
                status="done",
                error="",
                defense_estimated_epsilon=guard.estimated_epsilon_,
                defense_converged=guard.converged_,
                defense_retained=int(guard.retained_indices_.size),
                poison_removed_pct=_poison_removed_pct(
                    scenario.is_poison, guard.retained_indices_
                ),
                **_metric_cols(dreport),
            )
            if defense == "itrim":
                drow["defense_kink_found"] = guard.kink_found_
                drow["_kink"] = _kink_triples(guard, scenario.test)
                drow["_audit"] = guard.result_.to_dict()
            else:
                drow["_audit"] = guard.result_.to_dict()
        except Exception as err:
            drow.update(status="failed", error=f"{type(err).__name__}: {err}")
        drow["wall_time_s"] = time.perf_counter() - t1
        rows.append(dict(drow, cell_id=_cell_id(drow)))
    return rows


def _poison_removed_pct(is_poison: np.ndarray, retained: np.ndarray) -> float | None:
    total = int(is_poison.sum())
    if total == 0:
        return None
    kept = int(is_poison[retained].sum())
    return 100.0 * (total - kept) / total


def _kink_triples(guard: IterativeTrimDefense, test: Dataset) -> list:
    out = []
    for (eps_hat, loss), model in zip(guard.loss_trace_, guard.candidate_models_):
        err = test.targets - model.predict(test.features)
        out.append(
            {
                "epsilon_hat": float(eps_hat),
                "train_loss": float(loss),
                "test_mse": float(np.mean(err**2)),
            }
        )
    return out


def _cell_id(row: dict) -> str:
    return "{dataset}__{attack}__eps{epsilon:.4f}__{regressor}__{defense}".format(**row)


def _job_args(config: ExperimentConfig):
    """Materialize scenarios and enumerate (scenario, regressor) jobs."""
    args = []
    for d_idx, entry in enumerate(config.datasets):
        splits = prepare_dataset(
            entry, config.subsample_cap, derive_seed(config.seed, 1, d_idx)
        )
        for a_idx, attack in enumerate(config.attacks):
            for e_idx, eps in enumerate(config.epsilons):
                if eps == 0.0 and a_idx > 0:
                    continue  # one clean baseline per dataset, not per attack
                scenario = build_scenario(
                    splits,
                    _dataset_name(entry, splits),
                    attack,
                    eps,
                    derive_seed(config.seed, 2, d_idx, a_idx, e_idx),
                )
                for r_idx, kind in enumerate(config.regressors):
                    args.append(
                        (
                            scenario,
                            kind,
                            config.defenses,
                            config,
                            derive_seed(config.seed, 3, d_idx, a_idx, e_idx, r_idx),
                        )
                    )
    return args


def _dataset_name(entry, splits) -> str:
    d = _dataset_entry(entry)
    if "name" in d:
        return d["name"]
    return splits.train.name.split("/")[0]


def run_experiment(config: ExperimentConfig, out_dir=None, workers: int | None = None):
    """Run the full grid and return one report row per cell.

    Rows are sorted by coordinates; metric values are independent of the
    worker count.  When ``out_dir`` is given, writes ``report.csv``,
    ``figures/*.csv``, and per-defense-cell audit JSON under ``cells/``.
    """
    jobs = _job_args(config)
    env_workers = os.environ.get(WORKERS_ENV_VAR)
    if env_workers is not None:
        workers = int(env_workers)
    elif workers is None:
        workers = config.workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job_star, jobs))
    else:
        results = [_run_job_star(j) for j in jobs]
    rows = [row for chunk in results for row in chunk]
    _attach_baselines(rows)
    rows.sort(key=lambda r: (r["dataset"], r["regressor"], r["attack"], r["epsilon"], r["defense"]))
    if out_dir is not None:
        write_outputs(rows, out_dir)
    return rows


def _run_job_star(args):
    return run_job(*args)


def _attach_baselines(rows) -> None:
    """Fill the clean-baseline comparison columns on every row."""
    clean = {
        (r["dataset"], r["regressor"]): r
        for r in rows
        if r["epsilon"] == 0.0 and r["defense"] == "none" and r["status"] == "done"
    }
    for row in rows:
        base = clean.get((row["dataset"], row["regressor"]))
        if row["status"] != "done" or base is None:
            continue
        reports = {
            name: MetricsReport(
                mse=r["mse"],
                mae_original_units=r["mae_original"],
                acceptable_rate_pct=r["acceptable_rate_pct"],
                n_test=r["n_test"],
            )
            for name, r in (("clean", base), ("this", row))
        }
        ratios = ratio_report(reports["clean"], reports["this"])
        row["clean_mse"] = base["mse"]
        row["mse_ratio"] = ratios["mse_ratio_poisoned"]
        row["mae_ratio"] = ratios["mae_ratio_poisoned"]
        row["acceptable_decrease"] = ratios["acceptable_decrease_poisoned"]


def write_outputs(rows, out_dir) -> None:
    out = Path(out_dir)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    (out / "cells").mkdir(exist_ok=True)
    _write_csv(out / "report.csv", REPORT_COLUMNS, [_flat(r) for r in rows])
    for row in rows:
        audit = row.get("_audit")
        if audit is not None:
            payload = dict(audit)
            if "_kink" in row:
                payload["kink_trace"] = row["_kink"]
            (out / "cells" / f"{row['cell_id']}.json").write_text(
                json.dumps(payload, indent=2)
            )
    for figure in ("attack_curve", "defense_curve", "kink_trace"):
        try:
            series = emit_figure_series(rows, figure)
        except MissingCells:
            continue
        if series:
            _write_csv(out / "figures" / f"{figure}.csv", list(series[0]), series)


def _flat(row: dict) -> dict:
    return {col: row.get(col, "") for col in REPORT_COLUMNS}


def _write_csv(path, columns, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in columns})


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def emit_figure_series(rows, figure: str):
    """Derive the data series behind one of the three standard figures.

    ``attack_curve``   mean test MSE per (attack, regressor, epsilon)
    ``defense_curve``  per-defense median over regressors of the
                       dataset-averaged defended/clean MSE ratio
    ``kink_trace``     per-candidate (assumed rate, train loss, test MSE)
                       triples of every iterative-trim cell
    """
    done = [r for r in rows if r.get("status") == "done"]
    if figure == "attack_curve":
        cells = [r for r in done if r["defense"] == "none"]
        if not cells:
            raise MissingCells("no undefended cells in report")
        return _mean_series(
            cells, key=("attack", "regressor", "epsilon"), value="mse", out="mean_mse"
        )
    if figure == "defense_curve":
        cells = [r for r in done if r.get("mse_ratio") not in (None, "")]
        if not cells:
            raise MissingCells("no cells with a clean baseline")
        acc: dict = {}
        for r in cells:
            acc.setdefault(
                (r["defense"], r["epsilon"], r["regressor"]), []
            ).append(float(r["mse_ratio"]))
        per_regressor = {k: float(np.mean(v)) for k, v in acc.items()}
        grouped: dict = {}
        for (defense, eps, _), value in per_regressor.items():
            grouped.setdefault((defense, eps), []).append(value)
        return [
            {
                "defense": defense,
                "epsilon": eps,
                "median_normalized_mse": float(np.median(values)),
            }
            for (defense, eps), values in sorted(grouped.items())
        ]
    if figure == "kink_trace":
        out = []
        for r in done:
            for triple in r.get("_kink", []) or []:
                out.append(
                    {
                        "dataset": r["dataset"],
                        "regressor": r["regressor"],
                        "attack": r["attack"],
                        "epsilon": r["epsilon"],
                        **triple,
                    }
                )
        if not out:
            raise MissingCells("no iterative-trim cells with a loss trace")
        return out
    raise ValueError(f"unknown figure {figure!r}")


def _mean_series(cells, key, value, out):
    acc: dict = {}
    for r in cells:
        acc.setdefault(tuple(r[k] for k in key), []).append(float(r[value]))
    return [
        {**dict(zip(key, combo)), out: float(np.mean(vals))}
        for combo, vals in sorted(acc.items())
    ]


def load_report(out_dir):
    """Rebuild report rows (including defense traces) from a results directory."""
    import csv

    out = Path(out_dir)
    report = out / "report.csv"
    if not report.exists():
        raise MissingFile(str(report))
    rows = []
    with open(report, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            for col in (
                "epsilon",
                "mse",
                "mae_original",
                "acceptable_rate_pct",
                "clean_mse",
                "mse_ratio",
                "mae_ratio",
                "acceptable_decrease",
                "wall_time_s",
            ):
                row[col] = float(row[col]) if row.get(col) else None
            cell = out / "cells" / f"{row['cell_id']}.json"
            if cell.exists():
                audit = json.loads(cell.read_text())
                row["_audit"] = audit
                if "kink_trace" in audit:
                    row["_kink"] = audit["kink_trace"]
            rows.append(row)
    return rows


def warfarin_scenario(
    csv_path,
    target_column="Therapeutic Dose of Warfarin",
    epsilon: float = 0.02,
    seed: int = 0,
    regressors=("elasticnet", "huber", "kernelridge", "lasso", "mlp", "ridge", "svr"),
    subsample_cap: int = 10000,
    itrim: ITrimSettings = ITrimSettings(),
    cv_folds: int = 3,
):
    """Clean / poisoned / defended comparison on a dose-prediction CSV.

    Returns one row per regressor plus a lower-median summary row, with
    MAE in original dose units, MAE ratios against clean, and the
    percentage decrease in acceptable predictions.  Raises
    ``DatasetUnavailable`` when the CSV is absent.
    """
    path = Path(csv_path)
    if not path.exists():
        raise DatasetUnavailable(f"{path} not found; supply the dose CSV to run this")
    raw = load_csv(path, target_column)
    raw = subsample(raw, subsample_cap, derive_seed(seed, 1))
    scaled = apply_scaler(raw, fit_scaler(raw))
    splits = split(scaled, derive_seed(seed, 2))
    cfg = AttackConfig(epsilon=epsilon, target_n=splits.train.n, seed=derive_seed(seed, 3))
    poison = run_attack("flip", splits.substitute, cfg)
    poisoned, _ = append_and_shuffle(splits.train, poison, derive_seed(seed, 4))

    rows = []
    for r_idx, kind in enumerate(regressors):
        kind = canonical_kind(kind)
        job_seed = derive_seed(seed, 5, r_idx)
        clean_spec = grid_search(
            kind, default_grid(kind, cv_folds), splits.train.features, splits.train.targets, job_seed
        )
        clean_model = make_regressor(clean_spec).fit(
            splits.train.features, splits.train.targets
        )
        pois_spec = grid_search(
            kind, default_grid(kind, cv_folds), poisoned.features, poisoned.targets, job_seed
        )
        pois_model = make_regressor(pois_spec).fit(poisoned.features, poisoned.targets)
        guard = IterativeTrimDefense(
            make_regressor(pois_spec),
            epsilon_max=itrim.epsilon_max,
            runs=itrim.runs,
            threshold=itrim.threshold,
            random_state=derive_seed(seed, 6, r_idx),
        ).fit(poisoned.features, poisoned.targets)

        reports = {
            "clean": _metrics(clean_model, splits.test),
            "poisoned": _metrics(pois_model, splits.test),
            "defended": _metrics(guard.model_, splits.test),
        }
        ratios = ratio_report(reports["clean"], reports["poisoned"], reports["defended"])
        rows.append(
            {
                "model": kind,
                "mae_clean": reports["clean"].mae_original_units,
                "mae_poisoned": reports["poisoned"].mae_original_units,
                "mae_defended": reports["defended"].mae_original_units,
                "mae_ratio_poisoned": ratios["mae_ratio_poisoned"],
                "mae_ratio_defended": ratios["mae_ratio_defended"],
                "acceptable_decrease_poisoned": ratios["acceptable_decrease_poisoned"],
                "acceptable_decrease_defended": ratios["acceptable_decrease_defended"],
            }
        )
    summary = {"model": "median"}
    for col in rows[0]:
        if col != "model":
            summary[col] = lower_median([r[col] for r in rows if r[col] is not None])
    rows.append(summary)
    return rows
