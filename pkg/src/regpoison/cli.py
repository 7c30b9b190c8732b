"""Command-line interface.

Subcommands: ``poison``, ``defend``, ``train``, ``evaluate``,
``experiment``, ``report``.  Exit codes for ``experiment``: 0 when every
cell succeeded, 2 when any cell failed, 1 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .attacks import AttackConfig, run_attack
from .data import (
    Dataset,
    ScalingParams,
    apply_scaler,
    fit_scaler,
    load_csv,
    write_dataset_csv,
)
from .defenses import IterativeTrimDefense, TrimDefense
from .exceptions import ConfigInvalid, RegPoisonError
from .harness import ExperimentConfig, emit_figure_series, load_report, run_experiment
from .metrics import evaluate_predictions
from .regressors import RegressorSpec, default_grid, grid_search, make_regressor
from .regressors.serialize import model_from_dict, model_to_dict


def _load_scaled(path, target_column, scaling_path=None):
    raw = load_csv(path, target_column)
    if scaling_path:
        params = ScalingParams.from_dict(json.loads(Path(scaling_path).read_text()))
    else:
        params = fit_scaler(raw)
    return apply_scaler(raw, params), params


def _parse_params(pairs):
    out = {}
    for pair in pairs or ():
        key, _, value = pair.partition("=")
        if not _:
            raise ConfigInvalid(f"expected key=value, got {pair!r}")
        try:
            out[key] = int(value) if value.lstrip("-").isdigit() else float(value)
        except ValueError as err:
            raise ConfigInvalid(f"non-numeric value in {pair!r}") from err
    return out


def cmd_poison(args) -> int:
    data, params = _load_scaled(args.substitute, args.target_column, args.scaling)
    cfg = AttackConfig(epsilon=args.epsilon, target_n=args.train_size, seed=args.seed)
    poison = run_attack(args.attack, data, cfg)
    write_dataset_csv(poison, args.out)
    sidecar = {
        "attack": args.attack,
        "epsilon": args.epsilon,
        "train_size": args.train_size,
        "seed": args.seed,
        "poison_count": poison.size,
        "scaling": params.to_dict(),
    }
    if args.attack == "statp":
        sidecar["oracle"] = "kernel-ridge surrogate fit on the substitute set"
    Path(args.out).with_suffix(".provenance.json").write_text(
        json.dumps(sidecar, indent=2)
    )
    print(f"wrote {poison.size} poison rows to {args.out}")
    return 0


def _defense_from_args(args, estimator):
    if args.defense == "trim":
        if args.epsilon_hat is None:
            raise ConfigInvalid("trim needs --epsilon-hat")
        return TrimDefense(
            estimator, epsilon_hat=args.epsilon_hat, max_iter=args.max_iter,
            random_state=args.seed,
        )
    if args.epsilon_max is None:
        raise ConfigInvalid("itrim needs --epsilon-max")
    return IterativeTrimDefense(
        estimator,
        epsilon_max=args.epsilon_max,
        runs=args.runs,
        threshold=args.threshold,
        max_iter=args.max_iter,
        random_state=args.seed,
    )


def cmd_defend(args) -> int:
    if args.no_scale:
        raw = load_csv(args.input, args.target_column)
        data = Dataset(
            np.clip(raw.features, 0.0, 1.0), np.clip(raw.targets, 0.0, 1.0)
        )
    else:
        data, _ = _load_scaled(args.input, args.target_column)
    spec = RegressorSpec(args.regressor, _parse_params(args.param), seed=args.seed)
    guard = _defense_from_args(args, make_regressor(spec)).fit(
        data.features, data.targets
    )
    Path(args.out).write_text(json.dumps(guard.result_.to_dict(), indent=2))
    if args.cleaned_csv:
        kept = guard.retained_indices_
        write_dataset_csv(data.take(kept), args.cleaned_csv)
    print(
        f"retained {guard.retained_indices_.size} rows"
        f" (estimated poison rate {guard.estimated_epsilon_:.4f});"
        f" result written to {args.out}"
    )
    return 0


def cmd_train(args) -> int:
    data, params = _load_scaled(args.input, args.target_column)
    if args.grid_search:
        spec = grid_search(
            args.regressor, default_grid(args.regressor), data.features, data.targets,
            seed=args.seed,
        )
    else:
        spec = RegressorSpec(args.regressor, _parse_params(args.param), seed=args.seed)
    model = make_regressor(spec).fit(data.features, data.targets)
    payload = model_to_dict(model)
    payload["spec"] = spec.to_dict()
    payload["scaling"] = params.to_dict()
    Path(args.out).write_text(json.dumps(payload, indent=2))
    print(
        f"fit {spec.kind} (train MSE {model.training_loss_:.6g}); model written to {args.out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    payload = json.loads(Path(args.model).read_text())
    model = model_from_dict(payload)
    scaling = ScalingParams.from_dict(payload["scaling"]) if "scaling" in payload else None
    raw = load_csv(args.test, args.target_column)
    data = apply_scaler(raw, scaling) if scaling else apply_scaler(raw, fit_scaler(raw))
    report = evaluate_predictions(
        data.targets, model.predict(data.features), scaling=scaling
    )
    out = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(out)
    print(out)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    rows = run_experiment(config, out_dir=args.out, workers=args.workers)
    failed = sum(1 for r in rows if r["status"] == "failed")
    print(f"{len(rows)} cells, {failed} failed; outputs in {args.out}")
    return 2 if failed else 0


def cmd_report(args) -> int:
    rows = load_report(args.results)
    out_dir = Path(args.out or args.results) / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    figures = [args.figure] if args.figure else ["attack_curve", "defense_curve", "kink_trace"]
    for figure in figures:
        series = emit_figure_series(rows, figure)
        harness._write_csv(out_dir / f"{figure}.csv", list(series[0]), series)
        print(f"wrote {out_dir / (figure + '.csv')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regpoison",
        description="Poisoning attacks, trimmed-loss defenses, and experiments for regression learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("poison", help="generate poison rows from a substitute CSV")
    p.add_argument("--attack", choices=("flip", "statp"), required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--substitute", required=True)
    p.add_argument("--train-size", type=int, required=True, help="victim train size n")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-column", default=-1)
    p.add_argument("--scaling", help="sidecar JSON with shared scaling parameters")
    p.set_defaults(func=cmd_poison)

    p = sub.add_parser("defend", help="remove suspected poison rows from a CSV")
    p.add_argument("--defense", choices=("trim", "itrim"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--regressor", required=True)
    p.add_argument("--epsilon-hat", type=float)
    p.add_argument("--epsilon-max", type=float)
    p.add_argument("--runs", type=int, default=6)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--out", required=True, help="defense result JSON")
    p.add_argument("--cleaned-csv", help="also write the retained rows as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-column", default=-1)
    p.add_argument("--param", action="append", help="regressor hyperparameter key=value")
    p.add_argument("--no-scale", action="store_true", help="input is already in [0, 1]")
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("train", help="fit one regressor on a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--regressor", required=True)
    p.add_argument("--grid-search", action="store_true")
    p.add_argument("--param", action="append", help="hyperparameter key=value")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-column", default=-1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on a test CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out")
    p.add_argument("--target-column", default=-1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run a full experiment grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="re-derive figure series from an existing run")
    p.add_argument("--results", required=True, help="directory written by 'experiment'")
    p.add_argument("--figure", choices=("attack_curve", "defense_curve", "kink_trace"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except RegPoisonError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
