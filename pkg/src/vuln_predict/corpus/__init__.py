from .cwe import CweEntry, attach_cwe_details, load_cwe_catalog
from .exploits import (
    label_corpus,
    load_edb_index,
    load_edb_index_with_report,
    load_exploit_mapping,
    load_exploit_mapping_with_report,
    write_exploit_mapping_csv,
)
from .models import (
    CpeEntry,
    CpePart,
    CveId,
    CvssVector,
    CweInfo,
    ExploitMapping,
    LabeledCorpus,
    LabeledSample,
    ParseReport,
    Reference,
    TweetRecord,
    VulnRecord,
)
from .nvd import FeedFormat, parse_nvd_feed, parse_nvd_feed_with_report, write_canonical_jsonl
from .synthetic import SyntheticSpec, generate_synthetic_corpus, generate_synthetic_tweets
from .tweets import TweetAggregate, aggregate_tweets, load_tweet_corpus, load_tweet_corpus_with_report

__all__ = [
    "CpeEntry",
    "CpePart",
    "CveId",
    "CvssVector",
    "CweEntry",
    "CweInfo",
    "ExploitMapping",
    "FeedFormat",
    "LabeledCorpus",
    "LabeledSample",
    "ParseReport",
    "Reference",
    "SyntheticSpec",
    "TweetAggregate",
    "TweetRecord",
    "VulnRecord",
    "aggregate_tweets",
    "attach_cwe_details",
    "generate_synthetic_corpus",
    "generate_synthetic_tweets",
    "label_corpus",
    "load_cwe_catalog",
    "load_edb_index",
    "load_edb_index_with_report",
    "load_exploit_mapping",
    "load_exploit_mapping_with_report",
    "load_tweet_corpus",
    "load_tweet_corpus_with_report",
    "parse_nvd_feed",
    "parse_nvd_feed_with_report",
    "write_canonical_jsonl",
]
