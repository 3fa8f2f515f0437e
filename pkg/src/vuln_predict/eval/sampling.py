import logging
from dataclasses import dataclass
from datetime import date
from typing import Any, Dict, List, Tuple

import numpy as np

from ..corpus.models import ExploitMapping, LabeledCorpus, LabeledSample
from ..errors import ExploitDateCoverageError, InfeasibleSpecError, MetricsError
from ..utils.parsing_utils import add_months
from .metrics import ConfusionCounts, MetricsReport, compute_metrics

logger = logging.getLogger("vuln_predict")

MIN_DATE_COVERAGE = 0.99


def _pick(samples: List[LabeledSample], size: int, rng: np.random.Generator) -> List[LabeledSample]:
    chosen = set(rng.choice(len(samples), size=size, replace=False).tolist())
    return [s for i, s in enumerate(samples) if i in chosen]


def resample_to_ratio(corpus: LabeledCorpus, target_positive_fraction: float, seed: int) -> LabeledCorpus:
    """Downsample one class, without replacement, so the positive fraction hits the target.

    Raising the ratio drops negatives; lowering it drops positives. Samples are
    never modified or duplicated.
    """
    target = target_positive_fraction
    if not 0.0 < target < 1.0:
        raise ValueError(f"target positive fraction must be in (0, 1), got {target}")
    positives = [s for s in corpus if s.exploited]
    negatives = [s for s in corpus if not s.exploited]
    if not positives or not negatives:
        raise InfeasibleSpecError("Resampling needs both classes present")

    rng = np.random.default_rng(seed)
    n_pos, n_neg = len(positives), len(negatives)
    if target > corpus.positive_fraction:
        keep_neg = int(round(n_pos * (1.0 - target) / target))
        if keep_neg < 1:
            raise InfeasibleSpecError(f"target {target} leaves no negatives with {n_pos} positives")
        if keep_neg >= n_neg:
            return corpus
        negatives = _pick(negatives, keep_neg, rng)
    elif target < corpus.positive_fraction:
        keep_pos = int(round(target * n_neg / (1.0 - target)))
        if keep_pos < 1:
            raise InfeasibleSpecError(f"target {target} leaves no positives with {n_neg} negatives")
        if keep_pos >= n_pos:
            return corpus
        positives = _pick(positives, keep_pos, rng)
    else:
        return corpus

    resampled = corpus.derive(positives + negatives, f"resampled to {target:.2f} positive (seed={seed})")
    logger.debug(
        f"Resampled {len(corpus)} -> {len(resampled)} samples, positive fraction "
        f"{corpus.positive_fraction:.3f} -> {resampled.positive_fraction:.3f}"
    )
    return resampled


def _require_exploit_dates(corpus: LabeledCorpus) -> None:
    positives = [s for s in corpus if s.exploited]
    if not positives:
        raise ExploitDateCoverageError("No positives to check for exploit dates")
    dated = sum(1 for s in positives if s.earliest_exploit_date is not None)
    coverage = dated / len(positives)
    if dated == 0 or coverage < MIN_DATE_COVERAGE:
        raise ExploitDateCoverageError(
            f"Only {dated} of {len(positives)} positives ({coverage:.1%}) carry an exploit date; "
            f"at least {MIN_DATE_COVERAGE:.0%} are required"
        )


def is_pre_disclosed(sample: LabeledSample) -> bool:
    """An exploit dated on or before the disclosure day makes the sample pre-disclosed."""
    return sample.earliest_exploit_date is not None and sample.earliest_exploit_date <= sample.published


def filter_pre_disclosure(corpus: LabeledCorpus) -> Tuple[LabeledCorpus, int]:
    _require_exploit_dates(corpus)
    kept = [s for s in corpus if not is_pre_disclosed(s)]
    removed = len(corpus) - len(kept)
    logger.info(f"Removed {removed} vulnerabilities exploited on or before disclosure")
    return corpus.derive(kept, "pre-disclosed exploits removed"), removed


def matched_ratio_control(corpus: LabeledCorpus, reference: LabeledCorpus, seed: int) -> LabeledCorpus:
    """Drop random positives from ``corpus`` until it matches ``reference``'s positive fraction."""
    target = reference.positive_fraction
    if target > corpus.positive_fraction:
        raise InfeasibleSpecError(
            f"reference positive fraction {target:.3f} exceeds corpus fraction {corpus.positive_fraction:.3f}"
        )
    if target == corpus.positive_fraction:
        return corpus
    if target <= 0.0:
        raise InfeasibleSpecError("reference corpus has no positives to match")
    return resample_to_ratio(corpus, target, seed)


def lookup_baseline(test: LabeledCorpus, mapping: ExploitMapping) -> Tuple[ConfusionCounts, MetricsReport]:
    """Predict exploited iff the mapping already lists an exploit dated on or before disclosure."""
    _require_exploit_dates(test)
    tp = fp = tn = fn = 0
    for sample in test:
        earliest = mapping.earliest_date(sample.cve)
        predicted = earliest is not None and earliest <= sample.published
        if predicted and sample.exploited:
            tp += 1
        elif predicted:
            fp += 1
        elif sample.exploited:
            fn += 1
        else:
            tn += 1
    counts = ConfusionCounts(tp, fp, tn, fn)
    return counts, compute_metrics(counts)


@dataclass(frozen=True)
class LagHistogram:
    bin_width_days: int
    bins: Tuple[Tuple[int, int], ...]
    median_days: float
    pre_disclosure_fraction: float
    n_lags: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bin_width_days": self.bin_width_days,
            "bins": [{"start_day": start, "count": count} for start, count in self.bins],
            "median_days": self.median_days,
            "pre_disclosure_fraction": self.pre_disclosure_fraction,
            "n_lags": self.n_lags,
        }


def exploit_lags(corpus: LabeledCorpus) -> List[int]:
    """Days from disclosure to earliest exploit for each dated positive; negative means pre-disclosed."""
    return [
        (s.earliest_exploit_date - s.published).days
        for s in corpus
        if s.exploited and s.earliest_exploit_date is not None
    ]


def exploit_lag_histogram(corpus: LabeledCorpus, bin_width_days: int) -> LagHistogram:
    if bin_width_days < 1:
        raise ValueError(f"bin width must be >= 1 day, got {bin_width_days}")
    lags = exploit_lags(corpus)
    if not lags:
        raise ExploitDateCoverageError("No positives with an exploit date to build a lag histogram")

    values = np.asarray(lags, dtype=int)
    starts = (values // bin_width_days) * bin_width_days
    first, last = int(starts.min()), int(starts.max())
    bins = []
    for start in range(first, last + 1, bin_width_days):
        bins.append((start, int(np.sum(starts == start))))
    return LagHistogram(
        bin_width_days=bin_width_days,
        bins=tuple(bins),
        median_days=float(np.median(values)),
        pre_disclosure_fraction=float(np.mean(values <= 0)),
        n_lags=len(lags),
    )


def monthly_disclosure_counts(corpus: LabeledCorpus) -> List[Tuple[str, int]]:
    """Disclosures per calendar month, contiguous from the first to the last month."""
    if len(corpus) == 0:
        return []
    counts: Dict[str, int] = {}
    for sample in corpus:
        key = f"{sample.published.year:04d}-{sample.published.month:02d}"
        counts[key] = counts.get(key, 0) + 1
    low, high = corpus.date_range
    month = date(low.year, low.month, 1)
    out = []
    while month <= high:
        key = f"{month.year:04d}-{month.month:02d}"
        out.append((key, counts.get(key, 0)))
        month = add_months(month, 1)
    return out


def check_lookup_precision(counts: ConfusionCounts) -> None:
    # the mapping also labels the corpus, so a lookup hit is always a true positive
    if counts.fp != 0:
        raise MetricsError(f"Lookup baseline produced {counts.fp} false positives; mapping and labels disagree")
