from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

from ..corpus.models import CveId, CpePart, LabeledSample, VulnRecord
from ..corpus.tweets import TweetAggregate

DEFAULT_MAX_TERMS = 2000


class FeatureKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEXT = "text"


class FeatureMode(str, Enum):
    ALL = "all"
    SUMMARY_ONLY = "summary_only"


@dataclass(frozen=True)
class TweetedRecord:
    """A vulnerability together with the aggregate of the tweets that mention it."""

    record: VulnRecord
    tweets: Optional[TweetAggregate] = None


FeatureInput = Union[VulnRecord, TweetedRecord, LabeledSample]


def as_record(item: FeatureInput) -> VulnRecord:
    if isinstance(item, VulnRecord):
        return item
    if isinstance(item, (TweetedRecord, LabeledSample)):
        return item.record
    raise TypeError(f"Cannot extract features from {type(item).__name__}")


def row_id(item: FeatureInput) -> CveId:
    return as_record(item).cve


def _tweets(item: FeatureInput) -> Optional[TweetAggregate]:
    return item.tweets if isinstance(item, TweetedRecord) else None


def _cvss_field(name: str) -> Callable[[FeatureInput], Optional[str]]:
    def extract(item):
        value = getattr(as_record(item).cvss, name)
        return None if value.value == "MISSING" else value.value

    return extract


def _cpe_count(part: CpePart) -> Callable[[FeatureInput], float]:
    return lambda item: float(sum(1 for c in as_record(item).cpe_list if c.part == part))


def _cwe_parents(item: FeatureInput) -> Tuple[str, ...]:
    # several levels at once: one column per parent id
    return tuple(sorted({p.id for p in as_record(item).cwe.parents}))


def _tweet_stat(name: str) -> Callable[[FeatureInput], Optional[float]]:
    def extract(item):
        aggregate = _tweets(item)
        return None if aggregate is None else float(getattr(aggregate, name))

    return extract


# Every FeatureGroupSpec names its extractor by key so a serialized
# vectorizer can be re-bound on load.
EXTRACTORS: Dict[str, Callable[[FeatureInput], Any]] = {
    "cvss.access_vector": _cvss_field("access_vector"),
    "cvss.access_complexity": _cvss_field("access_complexity"),
    "cvss.authentication": _cvss_field("authentication"),
    "cvss.confidentiality_impact": _cvss_field("confidentiality_impact"),
    "cvss.integrity_impact": _cvss_field("integrity_impact"),
    "cvss.availability_impact": _cvss_field("availability_impact"),
    "cvss.base_score": lambda item: as_record(item).cvss.base_score,
    "cpe.hardware_count": _cpe_count(CpePart.HARDWARE),
    "cpe.os_count": _cpe_count(CpePart.OS),
    "cpe.application_count": _cpe_count(CpePart.APPLICATION),
    "cpe.list": lambda item: " ".join(str(c) for c in as_record(item).cpe_list),
    "cwe.id": lambda item: as_record(item).cwe.id,
    "cwe.name": lambda item: as_record(item).cwe.name,
    "cwe.description": lambda item: as_record(item).cwe.description,
    "cwe.parent_count": lambda item: float(as_record(item).cwe.parent_count),
    "cwe.parents": _cwe_parents,
    "cwe.parent_names": lambda item: " ".join(p.name for p in as_record(item).cwe.parents),
    "cwe.parent_descriptions": lambda item: " ".join(p.description for p in as_record(item).cwe.parents),
    "references.count": lambda item: float(len(as_record(item).references)),
    "references.type": lambda item: " ".join(r.ref_type for r in as_record(item).references),
    "references.source": lambda item: " ".join(r.source for r in as_record(item).references),
    "references.url": lambda item: " ".join(r.url for r in as_record(item).references),
    "summary": lambda item: as_record(item).summary,
    "tweets.tweet_count": _tweet_stat("tweet_count"),
    "tweets.high_friend_count": _tweet_stat("high_friend_count"),
    "tweets.high_follower_count": _tweet_stat("high_follower_count"),
    "tweets.retweets": _tweet_stat("retweets"),
    "tweets.favorites": _tweet_stat("favorites"),
    "tweets.avg_hashtags": _tweet_stat("avg_hashtags"),
    "tweets.avg_urls": _tweet_stat("avg_urls"),
    "tweets.avg_mentions": _tweet_stat("avg_mentions"),
    "tweets.verified_count": _tweet_stat("verified_count"),
    "tweets.avg_account_age_days": _tweet_stat("avg_account_age_days"),
    "tweets.text": lambda item: _tweets(item).text if _tweets(item) else "",
}


@dataclass(frozen=True)
class FeatureGroupSpec:
    name: str
    kind: FeatureKind
    source: str
    max_terms: int = DEFAULT_MAX_TERMS
    # fixed categorical levels; None means levels are learned at fit time
    levels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.source not in EXTRACTORS:
            raise ValueError(f"Unknown feature source {self.source!r}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1 for group {self.name}")

    def extract(self, item: FeatureInput) -> Any:
        return EXTRACTORS[self.source](item)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "source": self.source,
            "max_terms": self.max_terms,
            "levels": list(self.levels) if self.levels is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeatureGroupSpec":
        levels = data.get("levels")
        return cls(
            name=data["name"],
            kind=FeatureKind(data["kind"]),
            source=data["source"],
            max_terms=int(data.get("max_terms", DEFAULT_MAX_TERMS)),
            levels=tuple(levels) if levels is not None else None,
        )


_ACCESS_VECTOR = ("LOCAL", "ADJACENT_NETWORK", "NETWORK")
_ACCESS_COMPLEXITY = ("HIGH", "MEDIUM", "LOW")
_AUTHENTICATION = ("MULTIPLE", "SINGLE", "NONE")
_IMPACT = ("NONE", "PARTIAL", "COMPLETE")

TextCaps = Union[None, int, Mapping[str, int]]


def _cap(text_caps: TextCaps, name: str) -> int:
    if text_caps is None:
        return DEFAULT_MAX_TERMS
    if isinstance(text_caps, int):
        return text_caps
    return int(text_caps.get(name, DEFAULT_MAX_TERMS))


def _text(name: str, source: str, text_caps: TextCaps) -> FeatureGroupSpec:
    return FeatureGroupSpec(name, FeatureKind.TEXT, source, max_terms=_cap(text_caps, name))


def cvss_spec() -> List[FeatureGroupSpec]:
    """The six CVSS categoricals and the base score."""
    C, N = FeatureKind.CATEGORICAL, FeatureKind.NUMERIC
    return [
        FeatureGroupSpec("cvss_access_vector", C, "cvss.access_vector", levels=_ACCESS_VECTOR),
        FeatureGroupSpec("cvss_access_complexity", C, "cvss.access_complexity", levels=_ACCESS_COMPLEXITY),
        FeatureGroupSpec("cvss_authentication", C, "cvss.authentication", levels=_AUTHENTICATION),
        FeatureGroupSpec("cvss_confidentiality_impact", C, "cvss.confidentiality_impact", levels=_IMPACT),
        FeatureGroupSpec("cvss_integrity_impact", C, "cvss.integrity_impact", levels=_IMPACT),
        FeatureGroupSpec("cvss_availability_impact", C, "cvss.availability_impact", levels=_IMPACT),
        FeatureGroupSpec("cvss_score", N, "cvss.base_score"),
    ]


def summary_spec(text_caps: TextCaps = None) -> List[FeatureGroupSpec]:
    return [_text("summary", "summary", text_caps)]


def build_nvd_spec(text_caps: TextCaps = None) -> List[FeatureGroupSpec]:
    """The full NVD feature set: CVSS, CPE, CWE, references and summary (23 groups).

    ``text_caps`` overrides the vocabulary cap of TEXT groups, either for all of
    them (an int) or per group name.
    """
    C, N = FeatureKind.CATEGORICAL, FeatureKind.NUMERIC
    return [
        *cvss_spec(),
        FeatureGroupSpec("cpe_hardware_count", N, "cpe.hardware_count"),
        FeatureGroupSpec("cpe_os_count", N, "cpe.os_count"),
        FeatureGroupSpec("cpe_application_count", N, "cpe.application_count"),
        _text("cpe_list", "cpe.list", text_caps),
        FeatureGroupSpec("cwe_id", C, "cwe.id"),
        _text("cwe_name", "cwe.name", text_caps),
        _text("cwe_description", "cwe.description", text_caps),
        FeatureGroupSpec("cwe_parent_count", N, "cwe.parent_count"),
        FeatureGroupSpec("cwe_parents", C, "cwe.parents"),
        _text("cwe_parent_names", "cwe.parent_names", text_caps),
        _text("cwe_parent_descriptions", "cwe.parent_descriptions", text_caps),
        FeatureGroupSpec("reference_count", N, "references.count"),
        _text("reference_type", "references.type", text_caps),
        _text("reference_source", "references.source", text_caps),
        _text("reference_url", "references.url", text_caps),
        *summary_spec(text_caps),
    ]


def tweet_text_spec(text_caps: TextCaps = None) -> List[FeatureGroupSpec]:
    return [_text("tweet_text", "tweets.text", text_caps)]


def build_twitter_spec(text_caps: TextCaps = None) -> List[FeatureGroupSpec]:
    """Per-CVE tweet statistics plus the concatenated tweet bodies."""
    N = FeatureKind.NUMERIC
    stats = [
        ("tweet_count", "tweets.tweet_count"),
        ("tweet_high_friend_count", "tweets.high_friend_count"),
        ("tweet_high_follower_count", "tweets.high_follower_count"),
        ("tweet_retweets", "tweets.retweets"),
        ("tweet_favorites", "tweets.favorites"),
        ("tweet_avg_hashtags", "tweets.avg_hashtags"),
        ("tweet_avg_urls", "tweets.avg_urls"),
        ("tweet_avg_mentions", "tweets.avg_mentions"),
        ("tweet_verified_count", "tweets.verified_count"),
        ("tweet_avg_account_age_days", "tweets.avg_account_age_days"),
    ]
    return [FeatureGroupSpec(name, N, source) for name, source in stats] + tweet_text_spec(text_caps)


def spec_for_mode(mode: FeatureMode, text_caps: TextCaps = None) -> List[FeatureGroupSpec]:
    if FeatureMode(mode) == FeatureMode.SUMMARY_ONLY:
        return summary_spec(text_caps)
    return build_nvd_spec(text_caps)
