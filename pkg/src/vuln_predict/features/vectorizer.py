import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix

from ..corpus.models import CveId
from ..errors import FeatureError
from ..utils.parsing_utils import has_exploit_source_marker, tokenize
from .specs import FeatureGroupSpec, FeatureInput, FeatureKind, row_id

logger = logging.getLogger("vuln_predict")

FORMAT_VERSION = 1
STOP_WORDS_PATH = Path(__file__).parent / "stopwords.txt"


def load_stop_words(path: Path = STOP_WORDS_PATH) -> FrozenSet[str]:
    with open(path, "r", encoding="utf-8") as f:
        return frozenset(
            line.strip().lower() for line in f if line.strip() and not line.startswith("#")
        )


def idf(term_document_frequency: int, n_documents: int) -> float:
    """Smoothed inverse document frequency, ``ln((1 + n) / (1 + df)) + 1``."""
    if not 0 <= term_document_frequency <= n_documents:
        raise ValueError(f"document frequency {term_document_frequency} outside [0, {n_documents}]")
    return math.log((1 + n_documents) / (1 + term_document_frequency)) + 1.0


@dataclass(frozen=True)
class FeatureMatrix:
    """Sparse row-major feature matrix with labeled columns and CVE row ids."""

    matrix: csr_matrix
    column_labels: Tuple[str, ...]
    row_ids: Tuple[CveId, ...]

    def __post_init__(self):
        n_rows, n_cols = self.matrix.shape
        if n_cols != len(self.column_labels) or n_rows != len(self.row_ids):
            raise FeatureError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.column_labels)} labels"
            )

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class FittedVectorizer:
    specs: Tuple[FeatureGroupSpec, ...]
    numeric_stats: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    levels: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    vocabularies: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    idf_weights: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)
    stop_words: FrozenSet[str] = frozenset()
    fit_sample_count: int = 0

    def group_width(self, spec: FeatureGroupSpec) -> int:
        if spec.kind == FeatureKind.NUMERIC:
            return 1
        if spec.kind == FeatureKind.CATEGORICAL:
            return len(self.levels[spec.name])
        return len(self.vocabularies[spec.name])

    @property
    def n_cols(self) -> int:
        return sum(self.group_width(s) for s in self.specs)

    @property
    def column_labels(self) -> Tuple[str, ...]:
        labels: List[str] = []
        for spec in self.specs:
            if spec.kind == FeatureKind.NUMERIC:
                labels.append(spec.name)
            elif spec.kind == FeatureKind.CATEGORICAL:
                labels.extend(f"{spec.name}={level}" for level in self.levels[spec.name])
            else:
                labels.extend(f"{spec.name}:{term}" for term in self.vocabularies[spec.name])
        return tuple(labels)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "fit_sample_count": self.fit_sample_count,
            "stop_words": sorted(self.stop_words),
            "groups": [
                {
                    "spec": spec.to_dict(),
                    "numeric": list(self.numeric_stats[spec.name]) if spec.name in self.numeric_stats else None,
                    "levels": list(self.levels[spec.name]) if spec.name in self.levels else None,
                    "vocabulary": list(self.vocabularies[spec.name]) if spec.name in self.vocabularies else None,
                    "idf": list(self.idf_weights[spec.name]) if spec.name in self.idf_weights else None,
                }
                for spec in self.specs
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FittedVectorizer":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise FeatureError(f"Unsupported vectorizer format_version {version!r} (expected {FORMAT_VERSION})")
        specs, numeric, levels, vocabularies, weights = [], {}, {}, {}, {}
        for group in data["groups"]:
            spec = FeatureGroupSpec.from_dict(group["spec"])
            specs.append(spec)
            if spec.kind == FeatureKind.NUMERIC:
                mean, sd = group["numeric"]
                numeric[spec.name] = (float(mean), float(sd))
            elif spec.kind == FeatureKind.CATEGORICAL:
                levels[spec.name] = tuple(group["levels"])
            else:
                vocabularies[spec.name] = tuple(group["vocabulary"])
                weights[spec.name] = tuple(float(w) for w in group["idf"])
        return cls(
            specs=tuple(specs),
            numeric_stats=numeric,
            levels=levels,
            vocabularies=vocabularies,
            idf_weights=weights,
            stop_words=frozenset(data.get("stop_words", [])),
            fit_sample_count=int(data["fit_sample_count"]),
        )


def _category_levels(value: Any) -> Tuple[str, ...]:
    """Levels a categorical value switches on; a tuple switches on each of its items."""
    if value is None:
        return ()
    if isinstance(value, (tuple, list)):
        return tuple(str(v) for v in value)
    return (str(value),)


def _document_tokens(text: str, stop_words: FrozenSet[str]) -> List[str]:
    return [t for t in tokenize(text) if t not in stop_words and not has_exploit_source_marker(t)]


def fit_vectorizer(
    train: Sequence[FeatureInput],
    specs: Sequence[FeatureGroupSpec],
    stop_words: Optional[FrozenSet[str]] = None,
) -> FittedVectorizer:
    """Learn standardization stats, category levels and TF-IDF vocabularies from ``train`` only."""
    if not train:
        raise FeatureError("Cannot fit a vectorizer on an empty training set")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise FeatureError(f"Feature group names must be unique: {names}")
    if stop_words is None:
        stop_words = load_stop_words()

    numeric, levels, vocabularies, weights = {}, {}, {}, {}
    n = len(train)
    for spec in specs:
        values = [spec.extract(item) for item in train]
        if spec.kind == FeatureKind.NUMERIC:
            present = np.array([v for v in values if v is not None], dtype=float)
            if present.size and not np.all(np.isfinite(present)):
                raise FeatureError(f"Non-finite values in numeric group {spec.name}")
            if present.size:
                numeric[spec.name] = (float(np.mean(present)), float(np.std(present)))
            else:
                numeric[spec.name] = (0.0, 0.0)
        elif spec.kind == FeatureKind.CATEGORICAL:
            if spec.levels is not None:
                levels[spec.name] = tuple(spec.levels)
            else:
                levels[spec.name] = tuple(sorted({level for v in values for level in _category_levels(v)}))
        else:
            term_counts: Counter = Counter()
            document_counts: Counter = Counter()
            for text in values:
                tokens = _document_tokens(text or "", stop_words)
                term_counts.update(tokens)
                document_counts.update(set(tokens))
            ranked = sorted(term_counts, key=lambda t: (-term_counts[t], t))[: spec.max_terms]
            vocabularies[spec.name] = tuple(ranked)
            weights[spec.name] = tuple(idf(document_counts[t], n) for t in ranked)

    vectorizer = FittedVectorizer(
        specs=tuple(specs),
        numeric_stats=numeric,
        levels=levels,
        vocabularies=vocabularies,
        idf_weights=weights,
        stop_words=frozenset(stop_words),
        fit_sample_count=n,
    )
    logger.debug(f"Fitted vectorizer on {n} samples: {len(specs)} groups, {vectorizer.n_cols} columns")
    return vectorizer


def transform(v: FittedVectorizer, samples: Sequence[FeatureInput]) -> FeatureMatrix:
    """Vectorize ``samples`` with the fitted state; ``v`` is never modified."""
    rows: List[int] = []
    cols: List[int] = []
    data: List[float] = []
    offset = 0
    for spec in v.specs:
        if spec.kind == FeatureKind.NUMERIC:
            mean, sd = v.numeric_stats[spec.name]
            for r, item in enumerate(samples):
                value = spec.extract(item)
                if value is None or sd == 0.0:
                    continue
                z = (float(value) - mean) / sd
                if not math.isfinite(z):
                    raise FeatureError(f"Non-finite value in numeric group {spec.name} for {row_id(item)}")
                if z != 0.0:
                    rows.append(r)
                    cols.append(offset)
                    data.append(z)
        elif spec.kind == FeatureKind.CATEGORICAL:
            index = {level: i for i, level in enumerate(v.levels[spec.name])}
            for r, item in enumerate(samples):
                positions = sorted({index[level] for level in _category_levels(spec.extract(item)) if level in index})
                rows.extend([r] * len(positions))
                cols.extend(offset + p for p in positions)
                data.extend([1.0] * len(positions))
        else:
            vocabulary = v.vocabularies[spec.name]
            index = {term: i for i, term in enumerate(vocabulary)}
            weights = v.idf_weights[spec.name]
            for r, item in enumerate(samples):
                counts = Counter(t for t in tokenize(spec.extract(item) or "") if t in index)
                if not counts:
                    continue
                positions = sorted(index[t] for t in counts)
                values = np.array([counts[vocabulary[p]] * weights[p] for p in positions])
                values /= np.linalg.norm(values)
                rows.extend([r] * len(positions))
                cols.extend(offset + p for p in positions)
                data.extend(values.tolist())
        offset += v.group_width(spec)

    matrix = csr_matrix((data, (rows, cols)), shape=(len(samples), offset), dtype=float)
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return FeatureMatrix(matrix, v.column_labels, tuple(row_id(item) for item in samples))
