from datetime import date

import pytest

from vuln_predict.errors import SplitError
from vuln_predict.eval import SplitKind, SplitSpec, split
from corpus_test_factory import make_corpus, make_sample, monthly_corpus


@pytest.fixture(scope="module")
def corpus():
    return monthly_corpus()


class TestRandomSplit:
    def test_sizes_and_partition(self, corpus):
        ((train, test),) = split(corpus, SplitSpec(SplitKind.RANDOM, test_fraction=0.18, seed=1))
        assert len(test) == round(0.18 * len(corpus))
        assert len(train) + len(test) == len(corpus)
        assert not set(train.cve_ids) & set(test.cve_ids)

    def test_full_size_corpus(self):
        # the size of the 2009-2015 NVD corpus
        large = monthly_corpus(months=1, per_month=38129)
        ((train, test),) = split(large, SplitSpec(SplitKind.RANDOM, seed=0))
        assert len(test) == 6863
        assert len(train) == 38129 - 6863

    def test_seeded(self, corpus):
        spec = SplitSpec(SplitKind.RANDOM, seed=5)
        assert split(corpus, spec)[0][1].cve_ids == split(corpus, spec)[0][1].cve_ids
        assert split(corpus, spec)[0][1].cve_ids != split(corpus, SplitSpec(SplitKind.RANDOM, seed=6))[0][1].cve_ids

    def test_sides_keep_corpus_order(self, corpus):
        ((train, test),) = split(corpus, SplitSpec(SplitKind.RANDOM, seed=2))
        assert train.cve_ids == [c for c in corpus.cve_ids if c in set(train.cve_ids)]

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1])
    def test_bad_fraction(self, fraction):
        with pytest.raises(ValueError):
            SplitSpec(SplitKind.RANDOM, test_fraction=fraction)


class TestTemporalSplit:
    def test_cutoff(self, corpus):
        ((train, test),) = split(corpus, SplitSpec(SplitKind.TEMPORAL, cutoff=date(2015, 1, 1)))
        assert len(test) == 24
        assert train.date_range[1] < date(2015, 1, 1) <= test.date_range[0]

    def test_cutoff_outside_corpus(self, corpus):
        with pytest.raises(SplitError):
            split(corpus, SplitSpec(SplitKind.TEMPORAL, cutoff=date(2020, 1, 1)))

    def test_empty_train_side(self, corpus):
        with pytest.raises(SplitError):
            split(corpus, SplitSpec(SplitKind.TEMPORAL, cutoff=corpus.date_range[0]))

    def test_empty_corpus(self):
        with pytest.raises(SplitError):
            split(make_corpus([]), SplitSpec(SplitKind.TEMPORAL))


class TestSlidingWindow:
    def test_window_count_and_spans(self, corpus):
        pairs = split(corpus, SplitSpec(SplitKind.SLIDING_WINDOW, initial_train_months=12, step_months=6))
        assert len(pairs) == 11

        first_train, first_test = pairs[0]
        assert len(first_train) == 24
        assert len(first_test) == 12
        assert first_test.date_range == (date(2010, 1, 1), date(2010, 6, 14))
        assert pairs[-1][1].date_range == (date(2015, 1, 1), date(2015, 6, 14))

    def test_train_grows_and_precedes_test(self, corpus):
        pairs = split(corpus, SplitSpec(SplitKind.SLIDING_WINDOW))
        sizes = [len(train) for train, _ in pairs]
        assert sizes == sorted(sizes)
        for (train, test), (next_train, _) in zip(pairs, pairs[1:]):
            assert train.date_range[1] < test.date_range[0]
            assert len(next_train) == len(train) + len(test)

    def test_too_short_for_a_window(self):
        short = make_corpus([make_sample("CVE-2015-0001", "2015-01-01"), make_sample("CVE-2015-0002", "2015-03-01")])
        with pytest.raises(SplitError):
            split(short, SplitSpec(SplitKind.SLIDING_WINDOW))
