from .svm import (
    ClassWeighting,
    LinearModel,
    TrainConfig,
    decision_scores,
    objective,
    predict,
    sample_subgradient,
    train,
)

__all__ = [
    "ClassWeighting",
    "LinearModel",
    "TrainConfig",
    "decision_scores",
    "objective",
    "predict",
    "sample_subgradient",
    "train",
]
