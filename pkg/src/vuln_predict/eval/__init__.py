from .experiments import (
    ConditionResult,
    ExperimentReport,
    ExperimentSettings,
    class_separation,
    permutation_test,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    run_experiment_4,
    run_feature_ablation,
)
from .metrics import ConfusionCounts, MetricsReport, PrCurve, compute_metrics, confusion_from_predictions, pr_curve
from .sampling import (
    LagHistogram,
    exploit_lag_histogram,
    filter_pre_disclosure,
    lookup_baseline,
    matched_ratio_control,
    monthly_disclosure_counts,
    resample_to_ratio,
)
from .splits import SplitKind, SplitSpec, split

__all__ = [
    "ConditionResult",
    "ConfusionCounts",
    "ExperimentReport",
    "ExperimentSettings",
    "LagHistogram",
    "MetricsReport",
    "PrCurve",
    "SplitKind",
    "SplitSpec",
    "class_separation",
    "compute_metrics",
    "confusion_from_predictions",
    "exploit_lag_histogram",
    "filter_pre_disclosure",
    "lookup_baseline",
    "matched_ratio_control",
    "monthly_disclosure_counts",
    "permutation_test",
    "pr_curve",
    "resample_to_ratio",
    "run_experiment_1",
    "run_experiment_2",
    "run_experiment_3",
    "run_experiment_4",
    "run_feature_ablation",
    "split",
]
