from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import MetricsError

UNDEFINED = "undefined"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def _render(value: Optional[float]) -> Any:
    return UNDEFINED if value is None else value


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy, precision, recall and F1; ``None`` marks a zero-denominator metric."""

    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "precision": _render(self.precision),
            "recall": _render(self.recall),
            "f1": _render(self.f1),
        }


def compute_metrics(c: ConfusionCounts) -> MetricsReport:
    if c.total == 0:
        raise MetricsError("Cannot compute metrics over zero samples")
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(accuracy, precision, recall, f1)


def confusion_from_predictions(predicted: Sequence[int], labels: Sequence[int]) -> ConfusionCounts:
    pred = np.asarray(predicted) > 0
    truth = np.asarray(labels) > 0
    if pred.shape != truth.shape:
        raise MetricsError(f"{pred.shape[0]} predictions for {truth.shape[0]} labels")
    return ConfusionCounts(
        tp=int(np.sum(pred & truth)),
        fp=int(np.sum(pred & ~truth)),
        tn=int(np.sum(~pred & ~truth)),
        fn=int(np.sum(~pred & truth)),
    )


@dataclass(frozen=True)
class PrCurve:
    """Interpolated precision by recall, recall strictly increasing.

    ``raw_points`` keeps one (recall, precision) operating point per distinct
    score threshold, highest threshold first.
    """

    points: Tuple[Tuple[float, float], ...]
    raw_points: Tuple[Tuple[float, float], ...] = ()

    def precision_at(self, recall: float) -> float:
        """Interpolated precision: best precision at any recall >= ``recall``."""
        candidates = [p for r, p in self.points if r >= recall - 1e-12]
        return max(candidates) if candidates else 0.0

    def to_rows(self) -> List[Tuple[float, float]]:
        return list(self.points)


def pr_curve(scores: Sequence[float], labels: Sequence[int]) -> PrCurve:
    values = np.asarray(scores, dtype=float).ravel()
    truth = np.asarray(labels).ravel() > 0
    if values.shape != truth.shape:
        raise MetricsError(f"{values.shape[0]} scores for {truth.shape[0]} labels")
    n_pos = int(np.sum(truth))
    if n_pos == 0:
        raise MetricsError("PR curve needs at least one positive label")

    order = np.argsort(-values, kind="stable")
    sorted_scores, sorted_truth = values[order], truth[order]
    # last index of each run of tied scores
    boundaries = np.flatnonzero(np.diff(sorted_scores) != 0).tolist() + [len(values) - 1]
    tp_cumulative = np.cumsum(sorted_truth)
    raw = []
    for end in boundaries:
        tp = int(tp_cumulative[end])
        raw.append((tp / n_pos, tp / (end + 1)))

    best = {}
    running = 0.0
    for recall, precision in reversed(raw):
        running = max(running, precision)
        best[recall] = running
    points = [(0.0, max(p for _, p in raw))] if 0.0 not in best else []
    points.extend(sorted(best.items()))
    return PrCurve(tuple(points), tuple(raw))
