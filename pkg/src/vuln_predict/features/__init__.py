from .scrub import scrub_corpus, scrub_exploit_sources
from .specs import (
    FeatureGroupSpec,
    FeatureKind,
    FeatureMode,
    TweetedRecord,
    build_nvd_spec,
    build_twitter_spec,
    cvss_spec,
    spec_for_mode,
    summary_spec,
    tweet_text_spec,
)
from .vectorizer import FeatureMatrix, FittedVectorizer, fit_vectorizer, idf, load_stop_words, transform

__all__ = [
    "FeatureGroupSpec",
    "FeatureKind",
    "FeatureMatrix",
    "FeatureMode",
    "FittedVectorizer",
    "TweetedRecord",
    "build_nvd_spec",
    "build_twitter_spec",
    "cvss_spec",
    "fit_vectorizer",
    "idf",
    "load_stop_words",
    "scrub_corpus",
    "scrub_exploit_sources",
    "spec_for_mode",
    "summary_spec",
    "transform",
    "tweet_text_spec",
]
