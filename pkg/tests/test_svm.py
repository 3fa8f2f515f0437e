import json

import numpy as np
import pytest
from scipy.sparse import csr_matrix

from vuln_predict.errors import ModelError, ModelFormatError, TrainingError
from vuln_predict.model import (
    ClassWeighting,
    LinearModel,
    TrainConfig,
    decision_scores,
    objective,
    predict,
    sample_subgradient,
    train,
)
from vuln_predict.model import svm
from vuln_predict.model.svm import sample_weights, step_offset

SEPARABLE_X = np.array([[2.0, 2.0], [3.0, 1.0], [1.0, 3.0], [-2.0, -2.0], [-3.0, -1.0], [-1.0, -3.0]])
SEPARABLE_Y = np.array([1, 1, 1, -1, -1, -1])


def _overlapping_points(n=20, seed=0):
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    X = rng.normal(0.0, 0.6, size=(n, 2)) + 0.5 * y[:, None]
    return X, y


def _dense_reference(X, y, cfg):
    """Plain dense loop: every iterate kept, the last epoch averaged."""
    n, d = X.shape
    rng = np.random.default_rng(cfg.seed)
    t0 = step_offset(csr_matrix(X), np.ones(n), cfg.lam)
    w, b, t = np.zeros(d), 0.0, 0
    for _ in range(cfg.epochs):
        iterates, biases = [], []
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (cfg.lam * (t0 + t))
            violated = y[i] * (w @ X[i] + b) < 1.0
            w = (1.0 - eta * cfg.lam) * w
            if violated:
                w = w + eta * y[i] * X[i]
                b += eta * y[i]
            iterates.append(w.copy())
            biases.append(b)
    return np.mean(iterates, axis=0), float(np.mean(biases))


def _grid_objective(X, y, lam, w1, w2, b):
    """Objective for every (w1, w2, b) grid point at once."""
    W1, W2, B = np.meshgrid(w1, w2, b, indexing="ij")
    margins = y[:, None, None, None] * (X[:, 0, None, None, None] * W1 + X[:, 1, None, None, None] * W2 + B)
    hinge = np.maximum(0.0, 1.0 - margins).mean(axis=0)
    values = 0.5 * lam * (W1 ** 2 + W2 ** 2) + hinge
    best = np.unravel_index(np.argmin(values), values.shape)
    return values[best], (w1[best[0]], w2[best[1]], b[best[2]])


def _grid_oracle(X, y, lam):
    """Dense grid over a bounded box, refined twice around the best point."""
    axes = [np.linspace(-6.0, 6.0, 49), np.linspace(-6.0, 6.0, 49), np.linspace(-5.0, 5.0, 41)]
    value, point = _grid_objective(X, y, lam, *axes)
    for _ in range(2):
        steps = [a[1] - a[0] for a in axes]
        axes = [np.linspace(p - 2 * s, p + 2 * s, 41) for p, s in zip(point, steps)]
        value, point = _grid_objective(X, y, lam, *axes)
    return value


class TestTraining:
    def test_separable_set_is_fit_exactly(self):
        model = train(SEPARABLE_X, SEPARABLE_Y, TrainConfig(lam=0.01, epochs=200, seed=1))
        assert (predict(model, SEPARABLE_X) == SEPARABLE_Y).all()
        assert (np.sign(decision_scores(model, SEPARABLE_X)) == SEPARABLE_Y).all()

    def test_same_seed_same_model(self):
        X, y = _overlapping_points()
        cfg = TrainConfig(lam=0.1, epochs=10, seed=4)
        first, second = train(X, y, cfg), train(X, y, cfg)
        assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())

    def test_seed_changes_the_order(self):
        X, y = _overlapping_points()
        first = train(X, y, TrainConfig(lam=0.1, epochs=3, seed=1))
        second = train(X, y, TrainConfig(lam=0.1, epochs=3, seed=2))
        assert not np.array_equal(first.weights, second.weights)

    def test_objective_close_to_grid_oracle(self):
        X, y = _overlapping_points()
        lam = 0.1
        oracle = _grid_oracle(X, y, lam)
        model = train(X, y, TrainConfig(lam=lam, epochs=5000, seed=0))
        trained = objective(model.weights, model.bias, X, y, lam)
        assert abs(trained - oracle) / oracle <= 0.02

    def test_objective_beats_zero_model(self, small_corpus):
        from vuln_predict.features import fit_vectorizer, summary_spec, transform

        vectorizer = fit_vectorizer(list(small_corpus), summary_spec(200))
        X = transform(vectorizer, list(small_corpus))
        model = train(X, small_corpus.labels(), TrainConfig(epochs=3, seed=0))
        assert len(model.objective_history) == 3
        assert model.objective_history[-1] <= 1.0
        assert model.n_features == X.n_cols
        assert model.train_positive_fraction == pytest.approx(0.3)

    def test_default_config_on_full_nvd_features(self, small_corpus):
        from vuln_predict.features import build_nvd_spec, fit_vectorizer, transform

        vectorizer = fit_vectorizer(list(small_corpus), build_nvd_spec())
        X = transform(vectorizer, list(small_corpus))
        labels = small_corpus.labels()
        model = train(X, labels, TrainConfig())

        assert len(model.objective_history) == 20
        assert all(np.isfinite(model.objective_history))
        assert model.objective_history[-1] <= 1.0
        assert model.objective_history[-1] == pytest.approx(
            objective(model.weights, model.bias, X, labels, model.lam)
        )
        assert abs(model.bias) < 10.0

    def test_averaged_iterate_matches_dense_loop(self):
        X, y = _overlapping_points()
        cfg = TrainConfig(lam=0.1, epochs=4, seed=3)
        model = train(X, y, cfg)
        weights, bias = _dense_reference(X, y, cfg)
        np.testing.assert_allclose(model.weights, weights, rtol=1e-7, atol=1e-10)
        assert model.bias == pytest.approx(bias, rel=1e-7, abs=1e-10)

    def test_folding_the_scale_keeps_the_model(self, monkeypatch):
        X, y = _overlapping_points()
        cfg = TrainConfig(lam=0.1, epochs=4, seed=3)
        expected = train(X, y, cfg)
        # fold on every step
        monkeypatch.setattr(svm, "_MIN_SCALE", 0.9999)
        folded = train(X, y, cfg)
        np.testing.assert_allclose(folded.weights, expected.weights, rtol=1e-7, atol=1e-10)
        assert folded.bias == pytest.approx(expected.bias, rel=1e-7, abs=1e-10)

    def test_first_step_is_bounded(self):
        X = csr_matrix(np.array([[2.0, 2.0], [1.0, 0.0]]))
        # largest squared norm 8, plus 1 for the bias
        assert step_offset(X, np.ones(2), 1e-4) == pytest.approx(9.0 / 1e-4 - 1.0)
        assert step_offset(X, np.array([1.0, 3.0]), 1e-4) == pytest.approx(27.0 / 1e-4 - 1.0)
        assert step_offset(X, np.ones(2), 100.0) == 1.0

    def test_sparse_and_dense_inputs_agree(self):
        X, y = _overlapping_points()
        cfg = TrainConfig(lam=0.1, epochs=5, seed=0)
        dense, sparse = train(X, y, cfg), train(csr_matrix(X), y, cfg)
        np.testing.assert_allclose(dense.weights, sparse.weights)
        assert dense.bias == sparse.bias

    def test_balanced_weights(self):
        y = np.array([1.0, -1.0, -1.0, -1.0])
        weights = sample_weights(y, ClassWeighting.BALANCED)
        assert weights[y > 0].sum() == pytest.approx(2.0)
        assert weights[y < 0].sum() == pytest.approx(2.0)
        assert (sample_weights(y, ClassWeighting.NONE) == 1.0).all()

    def test_balanced_training_runs(self):
        X, y = _overlapping_points()
        model = train(X, y, TrainConfig(lam=0.1, epochs=5, class_weighting=ClassWeighting.BALANCED))
        assert model.class_weighting == ClassWeighting.BALANCED

    def test_single_class(self):
        with pytest.raises(TrainingError):
            train(SEPARABLE_X[:3], SEPARABLE_Y[:3], TrainConfig())

    def test_non_finite_features(self):
        X = SEPARABLE_X.copy()
        X[0, 0] = np.nan
        with pytest.raises(TrainingError):
            train(X, SEPARABLE_Y, TrainConfig())

    def test_bad_labels(self):
        with pytest.raises(TrainingError):
            train(SEPARABLE_X, [1, 0, 1, 0, 1, 0], TrainConfig())

    def test_row_label_mismatch(self):
        with pytest.raises(TrainingError):
            train(SEPARABLE_X, SEPARABLE_Y[:4], TrainConfig())

    @pytest.mark.parametrize("kwargs", [{"lam": 0.0}, {"lam": -1.0}, {"epochs": 0}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestSubgradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        lam, h = 0.3, 1e-6
        checked = 0
        for _ in range(200):
            w, x = rng.normal(size=5), rng.normal(size=5)
            b, y, c = float(rng.normal()), float(rng.choice([-1.0, 1.0])), float(rng.uniform(0.5, 2.0))
            margin = y * (w @ x + b)
            if abs(1.0 - margin) < 1e-3:
                continue

            def f(w_, b_):
                return 0.5 * lam * w_ @ w_ + c * max(0.0, 1.0 - y * (w_ @ x + b_))

            grad_w, grad_b = sample_subgradient(w, b, x, y, lam, c)
            numeric_w = np.array([(f(w + h * e, b) - f(w - h * e, b)) / (2 * h) for e in np.eye(5)])
            numeric_b = (f(w, b + h) - f(w, b - h)) / (2 * h)
            np.testing.assert_allclose(grad_w, numeric_w, atol=1e-5)
            assert grad_b == pytest.approx(numeric_b, abs=1e-5)
            checked += 1
        assert checked > 150


def _model(weights, bias):
    return LinearModel(np.asarray(weights, dtype=float), bias, lam=1e-4, epochs=1, seed=0, train_positive_fraction=0.5)


class TestScoring:
    def test_zero_model_scores_zero(self):
        assert (decision_scores(_model([0.0, 0.0], 0.0), SEPARABLE_X) == 0.0).all()

    def test_arithmetic(self):
        assert decision_scores(_model([1.5], -1.0), np.array([[2.0]]))[0] == pytest.approx(2.0)

    def test_thresholds(self):
        model = _model([1.0], 0.0)
        X = np.array([[-1.0], [2.0]])
        assert predict(model, X).tolist() == [-1, 1]
        assert predict(model, X, threshold=np.inf).tolist() == [-1, -1]
        assert predict(model, X, threshold=-np.inf).tolist() == [1, 1]

    def test_positive_scaling_keeps_predictions(self):
        X, y = _overlapping_points()
        model = train(X, y, TrainConfig(lam=0.1, epochs=5))
        for factor in (1e-3, 0.5, 7.0):
            assert (predict(model.scaled(factor), X) == predict(model, X)).all()

    def test_width_mismatch(self):
        with pytest.raises(ModelError):
            decision_scores(_model([1.0, 2.0, 3.0], 0.0), SEPARABLE_X)

    def test_non_finite_weights(self):
        with pytest.raises(ModelError):
            _model([np.inf], 0.0)


class TestSerialization:
    def test_sparse_weight_list(self):
        data = _model([0.0, 2.5, 0.0, -1.0], 0.25).to_dict()
        assert data["weights"] == [[1, 2.5], [3, -1.0]]
        assert data["format_version"] == 1
        restored = LinearModel.from_dict(json.loads(json.dumps(data)))
        np.testing.assert_array_equal(restored.weights, [0.0, 2.5, 0.0, -1.0])
        assert restored.bias == 0.25

    def test_version_mismatch(self):
        data = _model([1.0], 0.0).to_dict()
        data["format_version"] = 2
        with pytest.raises(ModelFormatError):
            LinearModel.from_dict(data)

    def test_malformed_document(self):
        data = _model([1.0], 0.0).to_dict()
        data["weights"] = [[5, 1.0]]
        with pytest.raises(ModelFormatError):
            LinearModel.from_dict(data)
