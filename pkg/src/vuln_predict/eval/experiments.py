"""Experiment drivers: class imbalance, split protocol, pre-disclosure filtering,
tweet versus NVD features, and a feature-set ablation.

Every driver scrubs exploit-archive references first, fits the vectorizer on
the training side only and reports metrics at decision threshold 0 together
with an interpolated PR curve per condition.
"""

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..corpus.models import ExploitMapping, LabeledCorpus, LabeledSample, TweetRecord
from ..corpus.tweets import DEFAULT_HIGH_FOLLOWER_COUNT, DEFAULT_HIGH_FRIEND_COUNT, aggregate_tweets
from ..errors import InfeasibleSpecError, MetricsError, VulnPredictError
from ..features.scrub import scrub_corpus
from ..features.specs import (
    FeatureGroupSpec,
    FeatureMode,
    TextCaps,
    TweetedRecord,
    build_twitter_spec,
    cvss_spec,
    spec_for_mode,
    summary_spec,
    tweet_text_spec,
)
from ..features.vectorizer import fit_vectorizer, transform
from ..model.svm import TrainConfig, decision_scores, train
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    PrCurve,
    compute_metrics,
    confusion_from_predictions,
    pr_curve,
)
from .sampling import (
    check_lookup_precision,
    filter_pre_disclosure,
    lookup_baseline,
    matched_ratio_control,
    resample_to_ratio,
)
from .splits import SplitKind, SplitSpec, split

logger = logging.getLogger("vuln_predict")

DEFAULT_RATIOS = (0.50, 0.17, 0.03)


@dataclass(frozen=True)
class ExperimentSettings:
    ratios: Tuple[float, ...] = DEFAULT_RATIOS
    feature_modes: Tuple[FeatureMode, ...] = (FeatureMode.ALL, FeatureMode.SUMMARY_ONLY)
    test_fraction: float = 0.18
    cutoff: date = date(2015, 1, 1)
    initial_train_months: int = 12
    step_months: int = 6
    text_caps: TextCaps = None
    train: TrainConfig = field(default_factory=TrainConfig)
    high_friend_threshold: int = DEFAULT_HIGH_FRIEND_COUNT
    high_follower_threshold: int = DEFAULT_HIGH_FOLLOWER_COUNT
    separation_bins: int = 20

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ratios": list(self.ratios),
            "feature_modes": [FeatureMode(m).value for m in self.feature_modes],
            "test_fraction": self.test_fraction,
            "cutoff": self.cutoff.isoformat(),
            "initial_train_months": self.initial_train_months,
            "step_months": self.step_months,
            "text_caps": dict(self.text_caps) if isinstance(self.text_caps, Mapping) else self.text_caps,
            "lambda": self.train.lam,
            "epochs": self.train.epochs,
            "class_weighting": self.train.class_weighting.value,
            "high_friend_threshold": self.high_friend_threshold,
            "high_follower_threshold": self.high_follower_threshold,
            "separation_bins": self.separation_bins,
        }


@dataclass(frozen=True)
class ScoreSeparation:
    """Decision-score histograms per class on a shared bin grid."""

    edges: Tuple[float, ...]
    positive_counts: Tuple[int, ...]
    negative_counts: Tuple[int, ...]
    separation: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "edges": list(self.edges),
            "positive_counts": list(self.positive_counts),
            "negative_counts": list(self.negative_counts),
            "separation": self.separation,
        }


def class_separation(scores: Sequence[float], labels: Sequence[int], n_bins: int = 20) -> ScoreSeparation:
    """Histogram scores by class; ``separation`` is the mean gap in pooled standard deviations."""
    values = np.asarray(scores, dtype=float)
    truth = np.asarray(labels) > 0
    if not truth.any() or truth.all():
        raise MetricsError("Class separation needs both classes")
    low, high = float(values.min()), float(values.max())
    if low == high:
        low, high = low - 0.5, high + 0.5
    edges = np.linspace(low, high, n_bins + 1)
    pos, _ = np.histogram(values[truth], bins=edges)
    neg, _ = np.histogram(values[~truth], bins=edges)
    pooled = np.sqrt((np.var(values[truth]) + np.var(values[~truth])) / 2.0)
    gap = float(np.mean(values[truth]) - np.mean(values[~truth]))
    return ScoreSeparation(
        edges=tuple(float(e) for e in edges),
        positive_counts=tuple(int(c) for c in pos),
        negative_counts=tuple(int(c) for c in neg),
        separation=gap / float(pooled) if pooled > 0 else None,
    )


@dataclass(frozen=True)
class PermutationResult:
    observed_difference: float
    p_value: float
    n_permutations: int


def permutation_test(
    values_a: Sequence[float], values_b: Sequence[float], n_permutations: int = 10000, seed: int = 0
) -> PermutationResult:
    """Two-sided test of the difference in means by label permutation."""
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("Both samples must be non-empty")
    observed = float(a.mean() - b.mean())
    pooled = np.concatenate([a, b])
    rng = np.random.default_rng(seed)
    extreme = 0
    for _ in range(n_permutations):
        shuffled = rng.permutation(pooled)
        diff = shuffled[: a.size].mean() - shuffled[a.size:].mean()
        if abs(diff) >= abs(observed) - 1e-12:
            extreme += 1
    return PermutationResult(observed, (extreme + 1) / (n_permutations + 1), n_permutations)


@dataclass
class ConditionResult:
    name: str
    train_size: int
    test_size: int
    train_positive_fraction: float
    test_positive_fraction: float
    counts: ConfusionCounts
    metrics: MetricsReport
    curve: Optional[PrCurve]
    test_cves: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    scores: Optional[np.ndarray] = field(default=None, repr=False)
    labels: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "train_positive_fraction": self.train_positive_fraction,
            "test_positive_fraction": self.test_positive_fraction,
            "counts": self.counts.to_dict(),
            "metrics": self.metrics.to_dict(),
            "pr_curve": [list(p) for p in self.curve.points] if self.curve else None,
            "test_cves": self.test_cves,
            "details": self.details,
        }


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    provenance: str
    corpus_size: int
    corpus_positive_fraction: float
    settings: Dict[str, Any]
    conditions: List[ConditionResult] = field(default_factory=list)
    errors: List[Tuple[str, str]] = field(default_factory=list)
    baseline: Optional[Tuple[ConfusionCounts, MetricsReport]] = None
    notes: Dict[str, Any] = field(default_factory=dict)

    def condition(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        baseline = None
        if self.baseline is not None:
            counts, metrics = self.baseline
            baseline = {"counts": counts.to_dict(), "metrics": metrics.to_dict()}
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "provenance": self.provenance,
            "corpus_size": self.corpus_size,
            "corpus_positive_fraction": self.corpus_positive_fraction,
            "settings": self.settings,
            "conditions": [c.to_dict() for c in self.conditions],
            "lookup_baseline": baseline,
            "errors": [{"condition": name, "message": message} for name, message in self.errors],
            "notes": self.notes,
        }


@dataclass(frozen=True)
class _TweetedSample(TweetedRecord):
    sample: Optional[LabeledSample] = None


FeatureItem = Union[LabeledSample, _TweetedSample]


def _sample(item: FeatureItem) -> LabeledSample:
    return item.sample if isinstance(item, _TweetedSample) else item


def _labels(items: Sequence[FeatureItem]) -> np.ndarray:
    return np.array([1 if _sample(i).exploited else -1 for i in items], dtype=int)


def _fraction(labels: np.ndarray) -> float:
    return float(np.mean(labels > 0)) if labels.size else 0.0


def evaluate_condition(
    name: str,
    train_items: Sequence[FeatureItem],
    test_items: Sequence[FeatureItem],
    specs: Sequence[FeatureGroupSpec],
    train_config: TrainConfig,
) -> ConditionResult:
    """Fit features and the SVM on ``train_items`` and score ``test_items``."""
    vectorizer = fit_vectorizer(train_items, specs)
    y_train = _labels(train_items)
    y_test = _labels(test_items)
    model = train(transform(vectorizer, train_items), y_train, train_config)
    scores = decision_scores(model, transform(vectorizer, test_items))
    counts = confusion_from_predictions(np.where(scores > 0, 1, -1), y_test)
    metrics = compute_metrics(counts)
    curve = pr_curve(scores, y_test) if np.any(y_test > 0) else None
    f1 = "undefined" if metrics.f1 is None else f"{metrics.f1:.3f}"
    logger.info(
        f"  {name}: train={len(train_items)} test={len(test_items)} "
        f"test positives={_fraction(y_test):.1%} F1={f1}"
    )
    return ConditionResult(
        name=name,
        train_size=len(train_items),
        test_size=len(test_items),
        train_positive_fraction=_fraction(y_train),
        test_positive_fraction=_fraction(y_test),
        counts=counts,
        metrics=metrics,
        curve=curve,
        test_cves=[str(_sample(i).cve) for i in test_items],
        scores=scores,
        labels=y_test,
    )


def _pooled_result(name: str, windows: List[ConditionResult]) -> ConditionResult:
    scores = np.concatenate([w.scores for w in windows])
    labels = np.concatenate([w.labels for w in windows])
    counts = confusion_from_predictions(np.where(scores > 0, 1, -1), labels)
    return ConditionResult(
        name=name,
        train_size=windows[-1].train_size,
        test_size=int(labels.size),
        train_positive_fraction=windows[-1].train_positive_fraction,
        test_positive_fraction=_fraction(labels),
        counts=counts,
        metrics=compute_metrics(counts),
        curve=pr_curve(scores, labels) if np.any(labels > 0) else None,
        test_cves=[cve for w in windows for cve in w.test_cves],
        details={
            "aggregation": "pooled predictions across windows",
            "windows": [
                {
                    "window": w.name,
                    "train_size": w.train_size,
                    "test_size": w.test_size,
                    "test_positive_fraction": w.test_positive_fraction,
                    "counts": w.counts.to_dict(),
                    "metrics": w.metrics.to_dict(),
                }
                for w in windows
            ],
        },
        scores=scores,
        labels=labels,
    )


class _Runner:
    """Runs named conditions, recording failures instead of raising unless ``fail_fast``."""

    def __init__(self, report: ExperimentReport, fail_fast: bool):
        self.report = report
        self.fail_fast = fail_fast

    def run(self, name: str, body: Callable[[], ConditionResult]) -> Optional[ConditionResult]:
        try:
            result = body()
        except VulnPredictError as e:
            if self.fail_fast:
                raise
            logger.error(f"❌ Condition {name} failed: {e}")
            self.report.errors.append((name, str(e)))
            return None
        self.report.conditions.append(result)
        return result


def _new_report(experiment: str, corpus: LabeledCorpus, seed: int, settings: ExperimentSettings) -> ExperimentReport:
    return ExperimentReport(
        experiment=experiment,
        seed=seed,
        provenance=corpus.provenance,
        corpus_size=len(corpus),
        corpus_positive_fraction=corpus.positive_fraction,
        settings=settings.to_dict(),
    )


def _train_config(settings: ExperimentSettings, seed: int) -> TrainConfig:
    return TrainConfig(
        lam=settings.train.lam,
        epochs=settings.train.epochs,
        seed=seed,
        class_weighting=settings.train.class_weighting,
    )


def _temporal_spec(settings: ExperimentSettings, cutoff: Optional[date] = None) -> SplitSpec:
    return SplitSpec(SplitKind.TEMPORAL, test_fraction=settings.test_fraction, cutoff=cutoff or settings.cutoff)


def _ratio_label(ratio: float) -> str:
    return f"{ratio * 100:g}pct"


def run_experiment_1(
    corpus: LabeledCorpus,
    feature_mode: Union[FeatureMode, Sequence[FeatureMode], None] = None,
    ratios: Optional[Sequence[float]] = None,
    seed: int = 0,
    settings: Optional[ExperimentSettings] = None,
    fail_fast: bool = True,
) -> ExperimentReport:
    """Class imbalance: resample to each ratio, random split, train and evaluate."""
    settings = settings or ExperimentSettings()
    if feature_mode is None:
        modes = list(settings.feature_modes)
    elif isinstance(feature_mode, (FeatureMode, str)):
        modes = [FeatureMode(feature_mode)]
    else:
        modes = [FeatureMode(m) for m in feature_mode]
    ratios = list(settings.ratios if ratios is None else ratios)

    report = _new_report("1", corpus, seed, settings)
    runner = _Runner(report, fail_fast)
    scrubbed = scrub_corpus(corpus)
    logger.info(f"Experiment 1: {len(ratios)} ratios x {len(modes)} feature modes")
    for k, ratio in enumerate(ratios):
        try:
            resampled = resample_to_ratio(scrubbed, ratio, seed + k)
            ((train_set, test_set),) = split(
                resampled, SplitSpec(SplitKind.RANDOM, test_fraction=settings.test_fraction, seed=seed + k)
            )
        except VulnPredictError as e:
            if fail_fast:
                raise
            for mode in modes:
                report.errors.append((f"{mode.value}_{_ratio_label(ratio)}", str(e)))
            continue
        for mode in modes:
            specs = spec_for_mode(mode, settings.text_caps)
            name = f"{mode.value}_{_ratio_label(ratio)}"
            result = runner.run(
                name,
                lambda: evaluate_condition(
                    name, train_set.samples, test_set.samples, specs, _train_config(settings, seed + k)
                ),
            )
            if result is not None:
                result.details["target_positive_fraction"] = ratio
                result.details["realized_positive_fraction"] = resampled.positive_fraction
    return report


def run_experiment_2(
    corpus: LabeledCorpus,
    seed: int = 0,
    settings: Optional[ExperimentSettings] = None,
    fail_fast: bool = True,
) -> ExperimentReport:
    """Split protocol: random batch, temporal batch and sliding-window evaluation."""
    settings = settings or ExperimentSettings()
    report = _new_report("2", corpus, seed, settings)
    runner = _Runner(report, fail_fast)
    scrubbed = scrub_corpus(corpus)
    specs = spec_for_mode(FeatureMode.ALL, settings.text_caps)
    config = _train_config(settings, seed)
    logger.info("Experiment 2: random, temporal and sliding-window splits")

    def batch(name: str, spec: SplitSpec) -> ConditionResult:
        ((train_set, test_set),) = split(scrubbed, spec)
        result = evaluate_condition(name, train_set.samples, test_set.samples, specs, config)
        result.details["split"] = spec.describe()
        positives = result.counts.tp + result.counts.fn
        if 0 < positives < result.test_size:
            separation = class_separation(result.scores, result.labels, settings.separation_bins)
            result.details["separation"] = separation.to_dict()
        return result

    def sliding() -> ConditionResult:
        spec = SplitSpec(
            SplitKind.SLIDING_WINDOW,
            initial_train_months=settings.initial_train_months,
            step_months=settings.step_months,
        )
        windows = []
        for index, (train_set, test_set) in enumerate(split(scrubbed, spec)):
            low, high = test_set.date_range
            windows.append(
                evaluate_condition(
                    f"window_{index + 1}_{low.isoformat()}_{high.isoformat()}",
                    train_set.samples,
                    test_set.samples,
                    specs,
                    config,
                )
            )
        result = _pooled_result("sliding_window", windows)
        result.details["split"] = spec.describe()
        return result

    runner.run("random", lambda: batch("random", SplitSpec(SplitKind.RANDOM, settings.test_fraction, seed=seed)))
    runner.run("temporal", lambda: batch("temporal", _temporal_spec(settings)))
    runner.run("sliding_window", sliding)
    return report


def run_experiment_3(
    corpus: LabeledCorpus,
    mapping: ExploitMapping,
    seed: int = 0,
    settings: Optional[ExperimentSettings] = None,
    fail_fast: bool = True,
) -> ExperimentReport:
    """Pre-disclosed exploits: all data, a matched-ratio control and the filtered corpus,
    each on the temporal split, plus the lookup baseline on the unfiltered test side.
    """
    settings = settings or ExperimentSettings()
    report = _new_report("3", corpus, seed, settings)
    runner = _Runner(report, fail_fast)
    scrubbed = scrub_corpus(corpus)
    # raises ExploitDateCoverageError when exploit dates are missing
    filtered, removed = filter_pre_disclosure(scrubbed)
    control = matched_ratio_control(scrubbed, filtered, seed)
    specs = spec_for_mode(FeatureMode.ALL, settings.text_caps)
    config = _train_config(settings, seed)
    split_spec = _temporal_spec(settings)
    report.notes = {
        "pre_disclosure_boundary": "exploits dated on the disclosure day count as pre-disclosed",
        "removed_pre_disclosed": removed,
        "filtered_positive_fraction": filtered.positive_fraction,
        "control_positive_fraction": control.positive_fraction,
    }
    logger.info(f"Experiment 3: {removed} pre-disclosed vulnerabilities removed")

    def condition(name: str, data: LabeledCorpus) -> ConditionResult:
        ((train_set, test_set),) = split(data, split_spec)
        result = evaluate_condition(name, train_set.samples, test_set.samples, specs, config)
        result.details["corpus_size"] = len(data)
        result.details["corpus_positive_fraction"] = data.positive_fraction
        result.details["corpus_positive_count"] = data.positive_count
        return result

    runner.run("all_data", lambda: condition("all_data", scrubbed))
    runner.run("matched_ratio_control", lambda: condition("matched_ratio_control", control))
    runner.run("pre_disclosure_filtered", lambda: condition("pre_disclosure_filtered", filtered))

    try:
        ((_, unfiltered_test),) = split(scrubbed, split_spec)
        counts, metrics = lookup_baseline(unfiltered_test, mapping)
        check_lookup_precision(counts)
        report.baseline = (counts, metrics)
    except VulnPredictError as e:
        if fail_fast:
            raise
        report.errors.append(("lookup_baseline", str(e)))
    return report


def run_experiment_4(
    corpus: LabeledCorpus,
    tweets: Sequence[TweetRecord],
    seed: int = 0,
    settings: Optional[ExperimentSettings] = None,
    fail_fast: bool = True,
) -> ExperimentReport:
    """Tweet versus NVD summary features on the CVEs that were tweeted about."""
    settings = settings or ExperimentSettings()
    if not tweets:
        raise InfeasibleSpecError("Experiment 4 needs a non-empty tweet corpus")
    aggregates = aggregate_tweets(tweets, settings.high_friend_threshold, settings.high_follower_threshold)
    tweeted = corpus.derive([s for s in corpus if s.cve in aggregates], "restricted to tweeted CVEs")
    if tweeted.positive_count == 0 or tweeted.negative_count == 0:
        raise InfeasibleSpecError(
            f"Tweeted CVEs ({len(tweeted)}) must include both exploited and unexploited vulnerabilities"
        )
    report = _new_report("4", tweeted, seed, settings)
    report.notes = {"tweeted_cves": len(tweeted), "tweets": len(tweets), "source_corpus_size": len(corpus)}
    runner = _Runner(report, fail_fast)
    scrubbed = scrub_corpus(tweeted)

    # disclosure-date split at the (1 - test_fraction) quantile of the tweeted CVEs
    cutoff = scrubbed.samples[min(len(scrubbed) - 1, int(len(scrubbed) * (1.0 - settings.test_fraction)))].published
    ((train_set, test_set),) = split(scrubbed, _temporal_spec(settings, cutoff))
    report.notes["cutoff"] = cutoff.isoformat()
    logger.info(f"Experiment 4: {len(tweeted)} tweeted CVEs, temporal cutoff {cutoff.isoformat()}")

    def items(data: LabeledCorpus) -> List[_TweetedSample]:
        return [_TweetedSample(record=s.record, tweets=aggregates[s.cve], sample=s) for s in data]

    train_items, test_items = items(train_set), items(test_set)
    config = _train_config(settings, seed)
    caps = settings.text_caps
    conditions = [
        ("nvd_summary_cvss", summary_spec(caps) + cvss_spec()),
        ("tweet_text_cvss", tweet_text_spec(caps) + cvss_spec()),
        ("tweet_text_stats_cvss", build_twitter_spec(caps) + cvss_spec()),
    ]
    for name, specs in conditions:
        runner.run(name, lambda: evaluate_condition(name, train_items, test_items, specs, config))
    return report


def run_feature_ablation(
    corpus: LabeledCorpus,
    seed: int = 0,
    settings: Optional[ExperimentSettings] = None,
    fail_fast: bool = True,
) -> ExperimentReport:
    """All NVD features versus the summary text alone, on the temporal split."""
    settings = settings or ExperimentSettings()
    report = _new_report("feature_ablation", corpus, seed, settings)
    runner = _Runner(report, fail_fast)
    scrubbed = scrub_corpus(corpus)
    config = _train_config(settings, seed)

    def condition(name: str, mode: FeatureMode) -> ConditionResult:
        ((train_set, test_set),) = split(scrubbed, _temporal_spec(settings))
        return evaluate_condition(
            name, train_set.samples, test_set.samples, spec_for_mode(mode, settings.text_caps), config
        )

    runner.run("all_features", lambda: condition("all_features", FeatureMode.ALL))
    runner.run("nvd_summary", lambda: condition("nvd_summary", FeatureMode.SUMMARY_ONLY))
    return report
