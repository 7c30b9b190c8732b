import numpy as np
import pytest

from oracles import best_trim_subset
from regpoison.attacks import AttackConfig, flip_attack
from regpoison.data import Dataset, append_and_shuffle, split
from regpoison.defenses import (
    IterativeTrimDefense,
    TrimDefense,
    candidate_seed,
    retained_count,
)
from regpoison.exceptions import TooFewRetained
from regpoison.regressors import KernelRidgeRegressor, LassoRegressor, RidgeRegressor


def outlier_instance():
    """Ten exact-line points plus one far outlier at index 10."""
    X = np.vstack([np.linspace(0.0, 1.0, 10).reshape(-1, 1), [[0.5]]])
    y = np.append(0.8 * X[:10].ravel() + 0.1, 1.0)
    return X, y


def poisoned_line(n=200, epsilon=0.05, noise=0.03, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 1))
    y = np.clip(0.6 * X.ravel() + 0.2 + rng.normal(0.0, noise, n), 0.0, 1.0)
    data = Dataset(X, y)
    splits = split(data, seed=seed)
    poison = flip_attack(
        splits.substitute, AttackConfig(epsilon=epsilon, target_n=splits.train.n, seed=seed)
    )
    mixed, mask = append_and_shuffle(splits.train, poison, seed=seed)
    return mixed, mask, splits


class TestTrim:
    def test_identity_on_clean_line(self):
        X = np.linspace(0.0, 1.0, 10).reshape(-1, 1)
        y = 0.8 * X.ravel() + 0.1
        guard = TrimDefense(RidgeRegressor(alpha=1e-10), epsilon_hat=0.0).fit(X, y)
        assert guard.retained_indices_.tolist() == list(range(10))
        assert guard.loss_ == pytest.approx(0.0, abs=1e-18)

    def test_outlier_matches_exhaustive_oracle(self):
        X, y = outlier_instance()
        guard = TrimDefense(
            RidgeRegressor(alpha=1e-10), epsilon_hat=0.1, random_state=0
        ).fit(X, y)
        oracle_subset, oracle_loss = best_trim_subset(
            X, y, retained_count(11, 0.1), lambda: RidgeRegressor(alpha=1e-10)
        )
        assert guard.retained_indices_.tolist() == oracle_subset.tolist()
        assert 10 not in guard.retained_indices_
        assert guard.model_.coef_[0] == pytest.approx(0.8, abs=1e-8)
        assert guard.loss_ == pytest.approx(oracle_loss, abs=1e-15)

    def test_retained_count_formula(self):
        for n, eps in [(100, 0.0), (100, 0.1), (63, 0.05), (1224, 0.14)]:
            assert retained_count(n, eps) == int(np.floor(n / (1 + eps)))

    @pytest.mark.parametrize("eps_hat", [0.02, 0.1, 0.2])
    def test_retained_size(self, eps_hat):
        mixed, _, _ = poisoned_line()
        guard = TrimDefense(RidgeRegressor(alpha=1e-6), epsilon_hat=eps_hat).fit(
            mixed.features, mixed.targets
        )
        assert guard.retained_indices_.size == retained_count(mixed.n, eps_hat)

    @pytest.mark.parametrize("estimator", [RidgeRegressor(alpha=1e-8), LassoRegressor(alpha=1e-5)])
    def test_loss_monotone_per_iteration(self, estimator):
        mixed, _, _ = poisoned_line(epsilon=0.08)
        guard = TrimDefense(estimator, epsilon_hat=0.08, random_state=3).fit(
            mixed.features, mixed.targets
        )
        objective = np.array(guard.objective_trace_)
        assert np.all(np.diff(objective) <= 1e-12)
        losses = np.array(guard.iteration_losses_)
        assert np.all(np.diff(losses) <= 1e-9)

    def test_final_residual_ranking_consistency(self):
        mixed, _, _ = poisoned_line(epsilon=0.06, seed=4)
        guard = TrimDefense(
            RidgeRegressor(alpha=1e-8), epsilon_hat=0.06, random_state=1
        ).fit(mixed.features, mixed.targets)
        assert guard.converged_
        residuals = (mixed.targets - guard.model_.predict(mixed.features)) ** 2
        kept = np.zeros(mixed.n, dtype=bool)
        kept[guard.retained_indices_] = True
        assert residuals[kept].max() <= residuals[~kept].min() + 1e-15

    def test_deterministic(self):
        mixed, _, _ = poisoned_line()
        runs = [
            TrimDefense(RidgeRegressor(alpha=1e-6), epsilon_hat=0.1, random_state=7)
            .fit(mixed.features, mixed.targets)
            .retained_indices_
            for _ in range(2)
        ]
        assert np.array_equal(runs[0], runs[1])

    def test_too_few_retained(self):
        X, y = outlier_instance()
        with pytest.raises(TooFewRetained):
            TrimDefense(RidgeRegressor(), epsilon_hat=0.9).fit(X[:3], y[:3])

    def test_removes_poison(self):
        mixed, mask, _ = poisoned_line(epsilon=0.05, seed=2)
        guard = TrimDefense(
            RidgeRegressor(alpha=1e-6), epsilon_hat=0.05, random_state=2
        ).fit(mixed.features, mixed.targets)
        assert mask[guard.retained_indices_].sum() == 0


class TestIterativeTrim:
    def test_clean_data_selects_first_comparable_candidate(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(300, 2))
        y = np.clip(0.4 * X[:, 0] + 0.3 * X[:, 1] + 0.15 + rng.normal(0, 0.02, 300), 0, 1)
        guard = IterativeTrimDefense(
            RidgeRegressor(alpha=1e-6), epsilon_max=0.14, runs=6, random_state=1
        ).fit(X, y)
        assert guard.kink_found_
        assert guard.estimated_epsilon_ == pytest.approx(0.14 / 5)

    def test_kink_detection_near_true_rate(self):
        mixed, _, _ = poisoned_line(n=600, epsilon=0.04, seed=8)
        guard = IterativeTrimDefense(
            RidgeRegressor(alpha=1e-6),
            epsilon_max=0.10,
            runs=6,
            random_state=3,
        ).fit(mixed.features, mixed.targets)
        assert abs(guard.estimated_epsilon_ - 0.04) <= 0.02 + 1e-9
        losses = [loss for _, loss in guard.loss_trace_]
        drops = [a / max(b, 1e-30) for a, b in zip(losses, losses[1:])]
        assert max(drops) >= 10.0

    def test_output_equals_direct_trim_run(self):
        mixed, _, _ = poisoned_line(epsilon=0.04, seed=9)
        guard = IterativeTrimDefense(
            RidgeRegressor(alpha=1e-6), epsilon_max=0.10, runs=6, random_state=11
        ).fit(mixed.features, mixed.targets)
        chosen_index = [e for e, _ in guard.loss_trace_].index(guard.estimated_epsilon_)
        direct = TrimDefense(
            RidgeRegressor(alpha=1e-6),
            epsilon_hat=guard.estimated_epsilon_,
            random_state=candidate_seed(11, chosen_index),
        ).fit(mixed.features, mixed.targets)
        assert np.array_equal(direct.retained_indices_, guard.retained_indices_)

    def test_retained_counts_monotone_across_candidates(self):
        mixed, _, _ = poisoned_line(epsilon=0.04)
        guard = IterativeTrimDefense(
            RidgeRegressor(alpha=1e-6), epsilon_max=0.14, runs=6, random_state=0
        ).fit(mixed.features, mixed.targets)
        counts = [retained_count(mixed.n, e) for e, _ in guard.loss_trace_]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_no_kink_falls_back_flagged(self):
        mixed, _, _ = poisoned_line(epsilon=0.05)
        guard = IterativeTrimDefense(
            RidgeRegressor(alpha=1e-6),
            epsilon_max=0.14,
            runs=6,
            threshold=1e-30,
            random_state=0,
        ).fit(mixed.features, mixed.targets)
        assert guard.kink_found_ is False
        assert guard.estimated_epsilon_ == pytest.approx(0.14)
        assert len(guard.loss_trace_) == 6

    def test_deterministic(self):
        mixed, _, _ = poisoned_line(epsilon=0.04)
        est = [
            IterativeTrimDefense(
                KernelRidgeRegressor(alpha=1e-3, gamma=1.0),
                epsilon_max=0.10,
                runs=6,
                random_state=2,
            )
            .fit(mixed.features, mixed.targets)
            .retained_indices_
            for _ in range(2)
        ]
        assert np.array_equal(est[0], est[1])

    def test_result_serializes(self):
        mixed, _, _ = poisoned_line(epsilon=0.04)
        guard = IterativeTrimDefense(
            RidgeRegressor(alpha=1e-6), epsilon_max=0.10, runs=6, random_state=2
        ).fit(mixed.features, mixed.targets)
        payload = guard.result_.to_dict()
        assert payload["estimated_epsilon"] == guard.estimated_epsilon_
        assert len(payload["loss_trace"]) == len(guard.loss_trace_)
        assert payload["model"]["kind"] == "ridge"
