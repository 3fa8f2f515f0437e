import io
import json

import pytest

from vuln_predict.corpus.models import CveId
from vuln_predict.corpus.tweets import aggregate_tweets, load_tweet_corpus_with_report, tweet_to_json
from conftest import data_file
from corpus_test_factory import make_tweet, tweet_row


def _jsonl(*rows) -> io.BytesIO:
    return io.BytesIO("".join(json.dumps(r) + "\n" for r in rows).encode("utf-8"))


def _fixture_tweets():
    with open(data_file("tweets.jsonl"), "rb") as f:
        return load_tweet_corpus_with_report(f)


class TestTweetLoading:
    def test_fixture_counts(self):
        tweets, report = _fixture_tweets()
        assert [t.tweet_id for t in tweets] == ["1", "2"]
        assert report.accepted == 2
        assert report.dropped == 1
        assert [loc for loc, _ in report.rejected] == ["line 4"]

    def test_cve_refs_are_canonical(self):
        tweets, _ = _fixture_tweets()
        assert tweets[1].cve_refs == {CveId.parse("CVE-2015-0001"), CveId.parse("CVE-2014-9999")}

    def test_explicit_refs_are_merged(self):
        tweets, _ = load_tweet_corpus_with_report(
            _jsonl(tweet_row("9", "no id in the body", cve_refs=["CVE-2016-0101"]))
        )
        assert tweets[0].cve_refs == {CveId.parse("CVE-2016-0101")}

    @pytest.mark.parametrize(
        "overrides",
        [
            {"author_verified": "yes"},
            {"retweets": 1.5},
            {"favorites": True},
            {"author_created_at": "2016-01-01T00:00:00Z"},
            {"created_at": "not a time"},
        ],
    )
    def test_invalid_rows_are_rejected(self, overrides):
        tweets, report = load_tweet_corpus_with_report(_jsonl(tweet_row("5", "CVE-2015-0001", **overrides)))
        assert tweets == []
        assert len(report.rejected) == 1

    def test_missing_field(self):
        row = tweet_row("5", "CVE-2015-0001")
        del row["url_count"]
        _, report = load_tweet_corpus_with_report(_jsonl(row))
        assert "url_count" in report.rejected[0][1]

    def test_serialized_tweet_loads_back(self):
        tweet = make_tweet("7", ["CVE-2015-0001"], retweets=3)
        tweets, report = load_tweet_corpus_with_report(_jsonl(tweet_to_json(tweet)))
        assert report.ok
        assert tweets == [tweet]


class TestAggregation:
    def test_fixture_aggregate(self):
        tweets, _ = _fixture_tweets()
        aggregates = aggregate_tweets(tweets)

        xss = aggregates[CveId.parse("CVE-2015-0001")]
        assert xss.tweet_count == 2
        assert xss.high_friend_count == 1
        assert xss.high_follower_count == 1
        assert xss.retweets == 14
        assert xss.favorites == 7
        assert xss.avg_hashtags == pytest.approx(0.5)
        assert xss.avg_urls == pytest.approx(0.5)
        assert xss.avg_mentions == pytest.approx(1.0)
        assert xss.verified_count == 1
        assert xss.avg_account_age_days == pytest.approx((365 + 730) / 2)
        assert xss.text.splitlines()[0].startswith("New XSS")

        assert aggregates[CveId.parse("CVE-2014-9999")].tweet_count == 1
        assert CveId.parse("CVE-2015-0002") not in aggregates

    def test_thresholds(self):
        tweets = [
            make_tweet("1", ["CVE-2015-0001"], friends=50, followers=500),
            make_tweet("2", ["CVE-2015-0001"], friends=500, followers=50),
        ]
        agg = aggregate_tweets(tweets, high_friend_threshold=100, high_follower_threshold=100)
        single = agg[CveId.parse("CVE-2015-0001")]
        assert (single.high_friend_count, single.high_follower_count) == (1, 1)

    def test_text_is_ordered_by_time(self):
        tweets = [
            make_tweet("b", ["CVE-2015-0001"], created_at="2015-01-03T00:00:00+00:00", body="second CVE-2015-0001"),
            make_tweet("a", ["CVE-2015-0001"], created_at="2015-01-02T00:00:00+00:00", body="first CVE-2015-0001"),
        ]
        text = aggregate_tweets(tweets)[CveId.parse("CVE-2015-0001")].text
        assert text == "first CVE-2015-0001\nsecond CVE-2015-0001"
