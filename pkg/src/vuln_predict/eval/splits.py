import logging
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import List, Tuple

import numpy as np

from ..corpus.models import LabeledCorpus
from ..errors import SplitError
from ..utils.parsing_utils import add_months

logger = logging.getLogger("vuln_predict")

SplitPair = Tuple[LabeledCorpus, LabeledCorpus]


class SplitKind(str, Enum):
    RANDOM = "random"
    TEMPORAL = "temporal"
    SLIDING_WINDOW = "sliding_window"


@dataclass(frozen=True)
class SplitSpec:
    kind: SplitKind
    test_fraction: float = 0.18
    cutoff: date = date(2015, 1, 1)
    initial_train_months: int = 12
    step_months: int = 6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.initial_train_months < 1 or self.step_months < 1:
            raise ValueError("window spans must be at least one month")

    def describe(self) -> str:
        kind = SplitKind(self.kind)
        if kind == SplitKind.RANDOM:
            return f"random(test_fraction={self.test_fraction}, seed={self.seed})"
        if kind == SplitKind.TEMPORAL:
            return f"temporal(cutoff={self.cutoff.isoformat()})"
        return f"sliding_window(initial={self.initial_train_months}mo, step={self.step_months}mo)"


def split(corpus: LabeledCorpus, spec: SplitSpec) -> List[SplitPair]:
    """Partition ``corpus`` into one (RANDOM, TEMPORAL) or more (SLIDING_WINDOW) train/test pairs."""
    if len(corpus) == 0:
        raise SplitError(f"Cannot split an empty corpus with {spec.describe()}")
    kind = SplitKind(spec.kind)
    if kind == SplitKind.RANDOM:
        pairs = [_random_split(corpus, spec)]
    elif kind == SplitKind.TEMPORAL:
        pairs = [_temporal_split(corpus, spec)]
    else:
        pairs = _sliding_windows(corpus, spec)
    for train, test in pairs:
        if len(train) == 0 or len(test) == 0:
            raise SplitError(
                f"{spec.describe()} left an empty {'train' if len(train) == 0 else 'test'} side"
            )
    return pairs


def _random_split(corpus: LabeledCorpus, spec: SplitSpec) -> SplitPair:
    n = len(corpus)
    n_test = int(round(spec.test_fraction * n))
    rng = np.random.default_rng(spec.seed)
    test_index = set(rng.permutation(n)[:n_test].tolist())
    train = [s for i, s in enumerate(corpus.samples) if i not in test_index]
    test = [s for i, s in enumerate(corpus.samples) if i in test_index]
    note = spec.describe()
    return corpus.derive(train, f"{note} train"), corpus.derive(test, f"{note} test")


def _temporal_split(corpus: LabeledCorpus, spec: SplitSpec) -> SplitPair:
    low, high = corpus.date_range
    if not low <= spec.cutoff <= high:
        raise SplitError(
            f"{spec.describe()}: cutoff outside corpus dates {low.isoformat()}..{high.isoformat()}"
        )
    train = [s for s in corpus if s.published < spec.cutoff]
    test = [s for s in corpus if s.published >= spec.cutoff]
    note = spec.describe()
    return corpus.derive(train, f"{note} train"), corpus.derive(test, f"{note} test")


def _sliding_windows(corpus: LabeledCorpus, spec: SplitSpec) -> List[SplitPair]:
    """Train on everything before each window, test on the window, then absorb it.

    Only windows that end on or before the last disclosure date are emitted.
    """
    start, last = corpus.date_range
    pairs = []
    k = 0
    while True:
        train_end = add_months(start, spec.initial_train_months + k * spec.step_months)
        test_end = add_months(start, spec.initial_train_months + (k + 1) * spec.step_months)
        if test_end > last:
            break
        train = [s for s in corpus if s.published < train_end]
        test = [s for s in corpus if train_end <= s.published < test_end]
        window = f"window {k + 1} [{train_end.isoformat()}, {test_end.isoformat()})"
        pairs.append((corpus.derive(train, f"{window} train"), corpus.derive(test, f"{window} test")))
        k += 1
    if not pairs:
        raise SplitError(f"{spec.describe()}: corpus dates {start}..{last} do not cover a single window")
    logger.debug(f"Sliding window split produced {len(pairs)} windows")
    return pairs
