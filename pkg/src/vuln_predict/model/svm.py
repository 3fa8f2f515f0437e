"""Linear SVM trained with a primal stochastic subgradient method (Pegasos).

The objective is ``(lam / 2) * ||w||^2 + (1 / n) * sum_i c_i * max(0, 1 - y_i (w . x_i + b))``
with an unregularized bias ``b``. Step ``t`` (counted across epochs, from 1)
uses the rate ``1 / (lam * (t0 + t))``, with ``t0`` set so the first step moves
any margin by at most 1. The model returned, and the objective recorded per
epoch, is the average of that epoch's iterates.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix, issparse

from ..errors import ModelError, ModelFormatError, TrainingError
from ..features.vectorizer import FeatureMatrix

logger = logging.getLogger("vuln_predict")

FORMAT_VERSION = 1
# below this the scaled representation is folded back into the weights
_MIN_SCALE = 1e-9

MatrixLike = Union[FeatureMatrix, csr_matrix, np.ndarray]


class ClassWeighting(str, Enum):
    NONE = "none"
    BALANCED = "balanced"


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-4
    epochs: int = 20
    seed: int = 0
    class_weighting: ClassWeighting = ClassWeighting.NONE

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    lam: float
    epochs: int
    seed: int
    train_positive_fraction: float
    class_weighting: ClassWeighting = ClassWeighting.NONE
    objective_history: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ModelError("Model weights and bias must be finite")

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[0])

    def scaled(self, factor: float) -> "LinearModel":
        return LinearModel(
            self.weights * factor,
            self.bias * factor,
            self.lam,
            self.epochs,
            self.seed,
            self.train_positive_fraction,
            self.class_weighting,
            self.objective_history,
        )

    def to_dict(self) -> Dict[str, Any]:
        nonzero = np.flatnonzero(self.weights)
        return {
            "format_version": FORMAT_VERSION,
            "lambda": self.lam,
            "epochs": self.epochs,
            "seed": self.seed,
            "class_weighting": self.class_weighting.value,
            "bias": float(self.bias),
            "n_features": self.n_features,
            "train_positive_fraction": self.train_positive_fraction,
            "objective_history": list(self.objective_history),
            "weights": [[int(i), float(self.weights[i])] for i in nonzero],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LinearModel":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"Unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
        try:
            weights = np.zeros(int(data["n_features"]), dtype=float)
            for index, value in data["weights"]:
                weights[int(index)] = float(value)
            return cls(
                weights=weights,
                bias=float(data["bias"]),
                lam=float(data["lambda"]),
                epochs=int(data["epochs"]),
                seed=int(data["seed"]),
                train_positive_fraction=float(data["train_positive_fraction"]),
                class_weighting=ClassWeighting(data.get("class_weighting", "none")),
                objective_history=tuple(float(v) for v in data.get("objective_history", [])),
            )
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed model document: {e}") from e


def _as_csr(X: MatrixLike) -> csr_matrix:
    if isinstance(X, FeatureMatrix):
        return X.matrix
    if issparse(X):
        return csr_matrix(X)
    return csr_matrix(np.atleast_2d(np.asarray(X, dtype=float)))


def _labels(y: Sequence[int]) -> np.ndarray:
    labels = np.asarray(y, dtype=float).ravel()
    if not np.all((labels == 1.0) | (labels == -1.0)):
        raise TrainingError("Labels must be +1 or -1")
    return labels


def sample_weights(y: np.ndarray, weighting: ClassWeighting) -> np.ndarray:
    """Per-sample loss weights; BALANCED gives each class total weight n / 2."""
    if ClassWeighting(weighting) == ClassWeighting.NONE:
        return np.ones_like(y)
    n = y.shape[0]
    n_pos = float(np.sum(y > 0))
    n_neg = n - n_pos
    return np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))


def objective(weights: np.ndarray, bias: float, X: MatrixLike, y: Sequence[int], lam: float, c=None) -> float:
    matrix = _as_csr(X)
    labels = np.asarray(y, dtype=float).ravel()
    costs = np.ones_like(labels) if c is None else np.asarray(c, dtype=float)
    margins = labels * (matrix @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * lam * np.dot(weights, weights) + np.mean(costs * hinge))


def sample_subgradient(
    weights: np.ndarray, bias: float, x: np.ndarray, y: float, lam: float, c: float = 1.0
) -> Tuple[np.ndarray, float]:
    """Subgradient of ``(lam / 2) ||w||^2 + c * max(0, 1 - y (w . x + b))`` in (w, b).

    This is the direction each training step moves against.
    """
    if y * (float(np.dot(weights, x)) + bias) < 1.0:
        return lam * weights - c * y * x, -c * y
    return lam * weights, 0.0


def step_offset(matrix: csr_matrix, costs: np.ndarray, lam: float) -> float:
    """Offset ``t0`` for the rate ``1 / (lam * (t0 + t))``.

    Chosen so the first step changes any training margin by at most 1; the
    bias counts as a constant feature of value 1.
    """
    sq_norms = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
    radius = (float(sq_norms.max(initial=0.0)) + 1.0) * float(costs.max())
    return max(radius / lam - 1.0, 1.0)


def train(X: MatrixLike, y: Sequence[int], cfg: TrainConfig) -> LinearModel:
    """Fit by stochastic subgradient descent and return the last epoch's averaged iterate."""
    matrix = _as_csr(X)
    labels = _labels(y)
    n, d = matrix.shape
    if n != labels.shape[0]:
        raise TrainingError(f"X has {n} rows but {labels.shape[0]} labels were given")
    if n < 2:
        raise TrainingError("Training needs at least 2 samples")
    if np.all(labels > 0) or np.all(labels < 0):
        raise TrainingError("Training data contains a single class")
    if not np.all(np.isfinite(matrix.data)):
        raise TrainingError("Feature matrix contains non-finite values")

    costs = sample_weights(labels, cfg.class_weighting)
    rng = np.random.default_rng(cfg.seed)
    indptr, indices, data = matrix.indptr, matrix.indices, matrix.data
    t0 = step_offset(matrix, costs, cfg.lam)

    # w = scale * v, so the shrink is O(1) and updates touch only nonzeros
    v = np.zeros(d, dtype=float)
    scale = 1.0
    bias = 0.0
    t = 0
    history = []
    for epoch in range(cfg.epochs):
        # sum of this epoch's iterates is folded + scale_sum * v - u
        folded = np.zeros(d, dtype=float)
        u = np.zeros(d, dtype=float)
        scale_sum = 0.0
        bias_sum = 0.0
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (cfg.lam * (t0 + t))
            start, end = indptr[i], indptr[i + 1]
            cols, vals = indices[start:end], data[start:end]
            margin = labels[i] * (scale * float(np.dot(v[cols], vals)) + bias)

            scale *= 1.0 - eta * cfg.lam
            if margin < 1.0:
                step = eta * costs[i] * labels[i]
                delta = (step / scale) * vals
                v[cols] += delta
                u[cols] += scale_sum * delta
                bias += step
            scale_sum += scale
            bias_sum += bias
            if scale < _MIN_SCALE:
                folded += scale_sum * v - u
                v *= scale
                scale = 1.0
                scale_sum = 0.0
                u[:] = 0.0
        avg_weights = (folded + scale_sum * v - u) / n
        avg_bias = bias_sum / n
        value = objective(avg_weights, avg_bias, matrix, labels, cfg.lam, costs)
        history.append(value)
        logger.debug(f"epoch {epoch + 1}/{cfg.epochs}: objective {value:.6f}, bias {avg_bias:.4f}")

    return LinearModel(
        weights=avg_weights,
        bias=float(avg_bias),
        lam=cfg.lam,
        epochs=cfg.epochs,
        seed=cfg.seed,
        train_positive_fraction=float(np.mean(labels > 0)),
        class_weighting=ClassWeighting(cfg.class_weighting),
        objective_history=tuple(history),
    )


def decision_scores(m: LinearModel, X: MatrixLike) -> np.ndarray:
    """Raw ``w . x + b`` per row, no thresholding."""
    matrix = _as_csr(X)
    if matrix.shape[1] != m.n_features:
        raise ModelError(f"Feature width {matrix.shape[1]} does not match model width {m.n_features}")
    return np.asarray(matrix @ m.weights + m.bias, dtype=float).ravel()


def predict(m: LinearModel, X: MatrixLike, threshold: float = 0.0) -> np.ndarray:
    return np.where(decision_scores(m, X) > threshold, 1, -1)
