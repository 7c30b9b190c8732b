"""Data-poisoning attacks, trimmed-loss defenses, and an experiment
harness for regression learning on tabular data."""

from .attacks import AttackConfig, PoisonSet, flip_attack, run_attack, sample_gaussian, statp_attack
from .data import (
    DataSplits,
    Dataset,
    FeasibilityDomain,
    RawDataset,
    ScalingParams,
    append_and_shuffle,
    apply_scaler,
    fit_scaler,
    invert_target,
    load_csv,
    split,
    subsample,
)
from .defenses import DefenseResult, IterativeTrimDefense, TrimDefense, retained_count
from .harness import ExperimentConfig, emit_figure_series, run_experiment, warfarin_scenario
from .metrics import MetricsReport, acceptable_rate, evaluate_predictions, mae, mse, ratio_report
from .regressors import (
    ElasticNetRegressor,
    HuberRegressor,
    HyperGrid,
    KernelRidgeRegressor,
    LassoRegressor,
    MLPRegressor,
    RegressorSpec,
    RidgeRegressor,
    SupportVectorRegressor,
    default_grid,
    grid_search,
    make_regressor,
    train_loss,
)
from .synth import make_synthetic, synthetic_suite

__version__ = "0.1.0"
