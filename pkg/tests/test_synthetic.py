from datetime import date

import pytest

from vuln_predict.corpus.exploits import write_exploit_mapping_csv
from vuln_predict.corpus.nvd import write_canonical_jsonl
from vuln_predict.corpus.synthetic import SyntheticSpec, generate_synthetic_corpus, generate_synthetic_tweets
from vuln_predict.errors import InfeasibleSpecError
from conftest import SMALL_SYNTHETIC_SPEC


def _pre_disclosed(corpus):
    return [s for s in corpus if s.exploited and s.earliest_exploit_date <= s.published]


class TestSyntheticCorpus:
    def test_same_seed_same_bytes(self):
        first, first_map = generate_synthetic_corpus(5, SMALL_SYNTHETIC_SPEC)
        second, second_map = generate_synthetic_corpus(5, SMALL_SYNTHETIC_SPEC)
        assert write_canonical_jsonl(s.record for s in first) == write_canonical_jsonl(s.record for s in second)
        assert write_exploit_mapping_csv(first_map) == write_exploit_mapping_csv(second_map)

    def test_different_seed_differs(self):
        first, _ = generate_synthetic_corpus(5, SMALL_SYNTHETIC_SPEC)
        second, _ = generate_synthetic_corpus(6, SMALL_SYNTHETIC_SPEC)
        assert [s.record.summary for s in first] != [s.record.summary for s in second]

    def test_exact_class_balance(self, small_corpus):
        assert len(small_corpus) == 600
        assert small_corpus.positive_count == round(0.3 * 600)

    def test_dates_within_range(self, small_corpus):
        first, last = small_corpus.date_range
        assert first >= date(2009, 1, 1)
        assert last <= date(2015, 12, 31)

    def test_every_positive_has_exploit_date(self, small_synthetic):
        corpus, mapping = small_synthetic
        assert len(mapping) == corpus.positive_count
        assert all(s.earliest_exploit_date is not None for s in corpus if s.exploited)

    def test_leak_strength_controls_pre_disclosure(self, small_corpus):
        assert len(_pre_disclosed(small_corpus)) == round(0.3 * small_corpus.positive_count)
        clean, _ = generate_synthetic_corpus(3, SyntheticSpec(n_samples=600, positive_fraction=0.3, n_vocab=400, signal_window=20))
        assert _pre_disclosed(clean) == []

    @pytest.mark.parametrize(
        "spec",
        [
            SyntheticSpec(n_samples=5),
            SyntheticSpec(positive_fraction=0.0),
            SyntheticSpec(positive_fraction=1.0),
            SyntheticSpec(n_samples=20, positive_fraction=0.01),
            SyntheticSpec(leak_strength=1.5),
            SyntheticSpec(date_range=(date(2015, 1, 1), date(2014, 1, 1))),
            SyntheticSpec(n_vocab=50),
        ],
    )
    def test_infeasible_specs(self, spec):
        with pytest.raises(InfeasibleSpecError):
            generate_synthetic_corpus(0, spec)


class TestSyntheticTweets:
    def test_tweets_reference_corpus(self, small_corpus):
        tweets = generate_synthetic_tweets(small_corpus, seed=3, coverage=0.5)
        known = set(small_corpus.cve_ids)
        assert tweets
        assert all(t.cve_refs <= known for t in tweets)
        assert all(t.author_created_at <= t.created_at for t in tweets)

    def test_deterministic(self, small_corpus):
        assert generate_synthetic_tweets(small_corpus, 4) == generate_synthetic_tweets(small_corpus, 4)

    def test_zero_coverage(self, small_corpus):
        assert generate_synthetic_tweets(small_corpus, 4, coverage=0.0) == []
