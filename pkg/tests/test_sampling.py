from datetime import date, timedelta

import pytest

from vuln_predict.corpus.models import CveId, ExploitMapping
from vuln_predict.errors import ExploitDateCoverageError, InfeasibleSpecError
from vuln_predict.eval import (
    exploit_lag_histogram,
    filter_pre_disclosure,
    lookup_baseline,
    matched_ratio_control,
    monthly_disclosure_counts,
    resample_to_ratio,
)
from corpus_test_factory import make_corpus, make_sample, monthly_corpus


@pytest.fixture(scope="module")
def corpus():
    # 168 samples, 56 exploited
    return monthly_corpus()


def _lag_corpus(lags):
    samples = []
    for i, lag in enumerate(lags):
        published = date(2014, 6, 1) + timedelta(days=i)
        samples.append(
            make_sample(f"CVE-2014-{1000 + i}", published, exploited=True, exploit_date=published + timedelta(days=lag))
        )
    samples.append(make_sample("CVE-2014-2000", "2014-06-02"))
    return make_corpus(samples)


def _mapping_for(corpus):
    return ExploitMapping.from_rows(
        (s.cve, f"edb-{s.cve}", s.earliest_exploit_date) for s in corpus if s.exploited
    )


class TestResampling:
    @pytest.mark.parametrize("target,size,positives", [(0.5, 112, 56), (0.17, 135, 23), (0.03, 115, 3)])
    def test_hits_target(self, corpus, target, size, positives):
        resampled = resample_to_ratio(corpus, target, seed=0)
        assert len(resampled) == size
        assert resampled.positive_count == positives
        assert set(resampled.cve_ids) <= set(corpus.cve_ids)

    def test_current_ratio_is_unchanged(self, corpus):
        assert resample_to_ratio(corpus, corpus.positive_fraction, seed=0) is corpus

    def test_seeded(self, corpus):
        assert resample_to_ratio(corpus, 0.17, 3).cve_ids == resample_to_ratio(corpus, 0.17, 3).cve_ids

    def test_infeasible(self, corpus):
        with pytest.raises(InfeasibleSpecError):
            resample_to_ratio(corpus, 0.999, seed=0)
        single = make_corpus([make_sample("CVE-2015-0001")])
        with pytest.raises(InfeasibleSpecError):
            resample_to_ratio(single, 0.5, seed=0)

    @pytest.mark.parametrize("target", [0.0, 1.0])
    def test_target_out_of_range(self, corpus, target):
        with pytest.raises(ValueError):
            resample_to_ratio(corpus, target, seed=0)


class TestPreDisclosure:
    def test_same_day_counts_as_pre_disclosed(self):
        filtered, removed = filter_pre_disclosure(_lag_corpus([-5, 0, 3]))
        assert removed == 2
        assert [str(c) for c in filtered.cve_ids] == ["CVE-2014-2000", "CVE-2014-1002"]

    def test_missing_exploit_dates(self):
        corpus = make_corpus([make_sample("CVE-2015-0001", exploited=True), make_sample("CVE-2015-0002")])
        with pytest.raises(ExploitDateCoverageError):
            filter_pre_disclosure(corpus)

    def test_matched_ratio_control(self, corpus):
        reference = resample_to_ratio(corpus, 0.25, seed=1)
        control = matched_ratio_control(corpus, reference, seed=2)
        assert control.negative_count == corpus.negative_count
        assert control.positive_fraction == pytest.approx(reference.positive_fraction, abs=0.01)

    def test_control_cannot_raise_the_ratio(self, corpus):
        reference = resample_to_ratio(corpus, 0.5, seed=1)
        with pytest.raises(InfeasibleSpecError):
            matched_ratio_control(corpus, reference, seed=2)


class TestLookupBaseline:
    def test_precision_is_exact(self):
        corpus = _lag_corpus([-2, 0, 4, 30])
        counts, metrics = lookup_baseline(corpus, _mapping_for(corpus))
        assert (counts.tp, counts.fp, counts.tn, counts.fn) == (2, 0, 1, 2)
        assert metrics.precision == 1.0
        assert metrics.recall == 0.5

    def test_unmapped_cves_are_negative(self):
        corpus = _lag_corpus([-2])
        counts, _ = lookup_baseline(corpus, ExploitMapping())
        assert counts.fn == 1 and counts.tp == 0
        assert CveId.parse("CVE-2014-1000") in _mapping_for(corpus)


class TestLagHistogram:
    LAGS = [-3, 0, 2, 10, 10, 15]

    def test_weekly_bins(self):
        histogram = exploit_lag_histogram(_lag_corpus(self.LAGS), bin_width_days=7)
        assert histogram.bins == ((-7, 1), (0, 2), (7, 2), (14, 1))
        assert histogram.median_days == 6.0
        assert histogram.pre_disclosure_fraction == pytest.approx(2 / 6)
        assert histogram.n_lags == 6

    def test_bin_width_conserves_count(self):
        corpus = _lag_corpus(self.LAGS)
        daily = exploit_lag_histogram(corpus, 1)
        weekly = exploit_lag_histogram(corpus, 7)
        assert sum(c for _, c in daily.bins) == sum(c for _, c in weekly.bins) == 6
        assert daily.bins[0] == (-3, 1)
        assert len(daily.bins) == 19

    def test_invalid(self):
        with pytest.raises(ValueError):
            exploit_lag_histogram(_lag_corpus(self.LAGS), 0)
        with pytest.raises(ExploitDateCoverageError):
            exploit_lag_histogram(make_corpus([make_sample("CVE-2015-0001")]), 7)


class TestMonthlyCounts:
    def test_contiguous_months(self, corpus):
        counts = monthly_disclosure_counts(corpus)
        assert len(counts) == 84
        assert counts[0] == ("2009-01", 2)
        assert counts[-1] == ("2015-12", 2)

    def test_gaps_are_zero(self):
        corpus = make_corpus([make_sample("CVE-2015-0001", "2015-01-20"), make_sample("CVE-2015-0002", "2015-04-02")])
        assert monthly_disclosure_counts(corpus) == [("2015-01", 1), ("2015-02", 0), ("2015-03", 0), ("2015-04", 1)]

    def test_empty(self):
        assert monthly_disclosure_counts(make_corpus([])) == []
