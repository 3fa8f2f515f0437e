import json
import logging
from dataclasses import dataclass
from typing import IO, Any, Dict, Iterable, List, Tuple

from ..utils.parsing_utils import extract_cve_tokens, parse_utc_timestamp
from .models import CveId, ParseReport, TweetRecord

logger = logging.getLogger("vuln_predict")

DEFAULT_HIGH_FRIEND_COUNT = 1000
DEFAULT_HIGH_FOLLOWER_COUNT = 1000

_COUNT_FIELDS = (
    "author_friends",
    "author_followers",
    "retweets",
    "favorites",
    "hashtag_count",
    "url_count",
    "mention_count",
)


def load_tweet_corpus(stream: IO[bytes]) -> List[TweetRecord]:
    tweets, report = load_tweet_corpus_with_report(stream)
    if report.rejected:
        logger.warning(f"{len(report.rejected)} tweet rows rejected")
    return tweets


def load_tweet_corpus_with_report(stream: IO[bytes], source: str = "") -> Tuple[List[TweetRecord], ParseReport]:
    """Read tweet JSONL. Tweets with no CVE-ID in body or ``cve_refs`` are dropped and counted."""
    report = ParseReport(source=source)
    tweets = []
    for line_no, line in enumerate(stream.read().split(b"\n"), start=1):
        if not line.strip():
            continue
        try:
            tweet = _tweet_from_json(json.loads(line.decode("utf-8")))
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            message = f"missing field {e.args[0]!r}" if isinstance(e, KeyError) else str(e)
            report.reject(f"line {line_no}", message)
            continue
        if not tweet.cve_refs:
            report.dropped += 1
            continue
        tweets.append(tweet)
    report.accepted = len(tweets)
    logger.info(
        f"Tweet corpus: {len(tweets)} tweets kept, {report.dropped} without CVE-ID dropped, "
        f"{len({c for t in tweets for c in t.cve_refs})} distinct CVEs"
    )
    return tweets, report


def _tweet_from_json(obj: Dict[str, Any]) -> TweetRecord:
    if not isinstance(obj, dict):
        raise TypeError("tweet row is not a JSON object")
    body = obj["body"]
    refs = set(extract_cve_tokens(body))
    for extra in obj.get("cve_refs") or []:
        refs.update(extract_cve_tokens(str(extra)))
    counts = {}
    for name in _COUNT_FIELDS:
        value = obj[name]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{name} must be an integer")
        counts[name] = value
    verified = obj["author_verified"]
    if not isinstance(verified, bool):
        raise ValueError("author_verified must be a boolean")
    return TweetRecord(
        tweet_id=str(obj["tweet_id"]),
        created_at=parse_utc_timestamp(obj["created_at"]),
        body=body,
        author_verified=verified,
        author_created_at=parse_utc_timestamp(obj["author_created_at"]),
        cve_refs=frozenset(CveId.parse(r) for r in refs),
        **counts,
    )


def tweet_to_json(tweet: TweetRecord) -> Dict[str, Any]:
    return {
        "tweet_id": tweet.tweet_id,
        "created_at": tweet.created_at.isoformat(),
        "body": tweet.body,
        "author_friends": tweet.author_friends,
        "author_followers": tweet.author_followers,
        "author_verified": tweet.author_verified,
        "author_created_at": tweet.author_created_at.isoformat(),
        "retweets": tweet.retweets,
        "favorites": tweet.favorites,
        "hashtag_count": tweet.hashtag_count,
        "url_count": tweet.url_count,
        "mention_count": tweet.mention_count,
        "cve_refs": sorted(str(c) for c in tweet.cve_refs),
    }


@dataclass(frozen=True)
class TweetAggregate:
    """Statistics over every tweet that references one CVE-ID."""

    tweet_count: int
    high_friend_count: int
    high_follower_count: int
    retweets: int
    favorites: int
    avg_hashtags: float
    avg_urls: float
    avg_mentions: float
    verified_count: int
    avg_account_age_days: float
    text: str


def aggregate_tweets(
    tweets: Iterable[TweetRecord],
    high_friend_threshold: int = DEFAULT_HIGH_FRIEND_COUNT,
    high_follower_threshold: int = DEFAULT_HIGH_FOLLOWER_COUNT,
) -> Dict[CveId, TweetAggregate]:
    by_cve: Dict[CveId, List[TweetRecord]] = {}
    for tweet in tweets:
        for cve in tweet.cve_refs:
            by_cve.setdefault(cve, []).append(tweet)

    aggregates = {}
    for cve, group in by_cve.items():
        group.sort(key=lambda t: (t.created_at, t.tweet_id))
        n = len(group)
        aggregates[cve] = TweetAggregate(
            tweet_count=n,
            high_friend_count=sum(1 for t in group if t.author_friends >= high_friend_threshold),
            high_follower_count=sum(1 for t in group if t.author_followers >= high_follower_threshold),
            retweets=sum(t.retweets for t in group),
            favorites=sum(t.favorites for t in group),
            avg_hashtags=sum(t.hashtag_count for t in group) / n,
            avg_urls=sum(t.url_count for t in group) / n,
            avg_mentions=sum(t.mention_count for t in group) / n,
            verified_count=sum(1 for t in group if t.author_verified),
            avg_account_age_days=sum(
                (t.created_at - t.author_created_at).total_seconds() / 86400.0 for t in group
            ) / n,
            text="\n".join(t.body for t in group),
        )
    return aggregates
