import json

import numpy as np
import pytest

from regpoison.cli import main
from regpoison.data import Dataset, write_dataset_csv


@pytest.fixture
def substitute_csv(tmp_path, rng):
    X = rng.uniform(size=(80, 2))
    y = np.clip(0.5 * X[:, 0] + 0.3 * X[:, 1] + rng.normal(0, 0.02, 80) + 0.1, 0, 1)
    path = tmp_path / "substitute.csv"
    write_dataset_csv(Dataset(X, y), path)
    return path


class TestPoisonCommand:
    @pytest.mark.parametrize("attack", ["flip", "statp"])
    def test_writes_poison_and_sidecar(self, tmp_path, substitute_csv, attack, capsys):
        out = tmp_path / "poison.csv"
        code = main(
            [
                "poison",
                "--attack", attack,
                "--epsilon", "0.05",
                "--substitute", str(substitute_csv),
                "--train-size", "200",
                "--out", str(out),
                "--seed", "3",
            ]
        )
        assert code == 0
        assert out.exists()
        sidecar = json.loads(out.with_suffix(".provenance.json").read_text())
        assert sidecar["poison_count"] == 10
        assert len(out.read_text().splitlines()) == 11

    def test_missing_file_is_error(self, tmp_path):
        code = main(
            [
                "poison",
                "--attack", "flip",
                "--epsilon", "0.05",
                "--substitute", str(tmp_path / "nope.csv"),
                "--train-size", "100",
                "--out", str(tmp_path / "p.csv"),
            ]
        )
        assert code == 1


class TestDefendCommand:
    def test_trim_result_json(self, tmp_path, substitute_csv):
        out = tmp_path / "defense.json"
        cleaned = tmp_path / "cleaned.csv"
        code = main(
            [
                "defend",
                "--defense", "trim",
                "--input", str(substitute_csv),
                "--regressor", "ridge",
                "--param", "alpha=0.0001",
                "--epsilon-hat", "0.1",
                "--out", str(out),
                "--cleaned-csv", str(cleaned),
            ]
        )
        assert code == 0
        result = json.loads(out.read_text())
        assert len(result["retained_indices"]) == int(80 / 1.1)
        assert cleaned.exists()

    def test_itrim_result_json(self, tmp_path, substitute_csv):
        out = tmp_path / "defense.json"
        code = main(
            [
                "defend",
                "--defense", "itrim",
                "--input", str(substitute_csv),
                "--regressor", "ridge",
                "--epsilon-max", "0.1",
                "--runs", "4",
                "--out", str(out),
            ]
        )
        assert code == 0
        result = json.loads(out.read_text())
        assert result["kink_found"] is True
        assert len(result["loss_trace"]) >= 2

    def test_missing_epsilon_hat_is_config_error(self, tmp_path, substitute_csv):
        code = main(
            [
                "defend",
                "--defense", "trim",
                "--input", str(substitute_csv),
                "--regressor", "ridge",
                "--out", str(tmp_path / "d.json"),
            ]
        )
        assert code == 1


class TestTrainEvaluate:
    def test_round_trip(self, tmp_path, substitute_csv, capsys):
        model_path = tmp_path / "model.json"
        assert (
            main(
                [
                    "train",
                    "--input", str(substitute_csv),
                    "--regressor", "ridge",
                    "--param", "alpha=0.0001",
                    "--out", str(model_path),
                ]
            )
            == 0
        )
        capsys.readouterr()
        metrics_path = tmp_path / "metrics.json"
        assert (
            main(
                [
                    "evaluate",
                    "--model", str(model_path),
                    "--test", str(substitute_csv),
                    "--out", str(metrics_path),
                ]
            )
            == 0
        )
        metrics = json.loads(metrics_path.read_text())
        assert metrics["mse"] < 0.01
        assert metrics["n_test"] == 80

    def test_grid_search_flag(self, tmp_path, substitute_csv):
        model_path = tmp_path / "model.json"
        code = main(
            [
                "train",
                "--input", str(substitute_csv),
                "--regressor", "lasso",
                "--grid-search",
                "--out", str(model_path),
            ]
        )
        assert code == 0
        assert "spec" in json.loads(model_path.read_text())


class TestExperimentAndReport:
    @pytest.fixture
    def config_path(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps(
                {
                    "datasets": [{"synthetic": "linear", "n": 250, "d": 2}],
                    "regressors": ["ridge"],
                    "epsilons": [0.0, 0.05],
                    "attacks": ["flip"],
                    "defenses": ["none", "itrim"],
                    "itrim": {"epsilon_max": 0.1, "runs": 4, "threshold": 0.001},
                    "seed": 5,
                }
            )
        )
        return path

    def test_experiment_exit_zero_and_report(self, tmp_path, config_path, capsys):
        out_dir = tmp_path / "results"
        assert (
            main(["experiment", "--config", str(config_path), "--out", str(out_dir)])
            == 0
        )
        capsys.readouterr()
        assert (out_dir / "report.csv").exists()
        (out_dir / "figures" / "kink_trace.csv").unlink()
        assert (
            main(["report", "--results", str(out_dir), "--figure", "kink_trace"]) == 0
        )
        assert (out_dir / "figures" / "kink_trace.csv").exists()

    def test_experiment_config_error_exit_one(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"datasets": [], "seed": 0}))
        assert (
            main(["experiment", "--config", str(bad), "--out", str(tmp_path / "r")])
            == 1
        )

    def test_experiment_failure_exit_two(self, tmp_path):
        config = tmp_path / "failing.json"
        config.write_text(
            json.dumps(
                {
                    "datasets": [{"synthetic": "linear", "n": 250, "d": 2}],
                    "regressors": ["ridge"],
                    "epsilons": [0.0],
                    "attacks": ["flip"],
                    "defenses": ["none"],
                    "grids": {"ridge": {"alpha": [0.0]}},
                    "seed": 5,
                }
            )
        )
        assert (
            main(["experiment", "--config", str(config), "--out", str(tmp_path / "r2")])
            == 2
        )
