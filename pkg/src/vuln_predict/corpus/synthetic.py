"""Deterministic synthetic corpora for desk-scale experiments.

Summaries mix a Zipf-distributed neutral vocabulary with a block of
class-discriminative terms. The block the positives draw from slides along a
larger signal pool as time advances (``drift_rate`` block widths per year), so a
model trained on older disclosures misses the terms that mark newer exploited
ones. Pre-disclosed positives (``leak_strength``) additionally use a fixed
phrasing pool that makes them easy to spot.
"""

import logging
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from typing import List, Tuple

import numpy as np

from ..errors import InfeasibleSpecError
from .exploits import label_corpus
from .models import (
    AccessComplexity,
    AccessVector,
    Authentication,
    CpeEntry,
    CpePart,
    CveId,
    CvssVector,
    CweInfo,
    CweParent,
    ExploitMapping,
    Impact,
    LabeledCorpus,
    Reference,
    TweetRecord,
    VulnRecord,
)

logger = logging.getLogger("vuln_predict")

# (id, name, description, parent id, parent name)
_CWE_TABLE = [
    ("CWE-79", "cross site scripting", "improper neutralization of input during web page generation", "CWE-74", "injection"),
    ("CWE-89", "sql injection", "improper neutralization of special elements used in an sql command", "CWE-74", "injection"),
    ("CWE-119", "buffer errors", "improper restriction of operations within the bounds of a memory buffer", "CWE-118", "memory range access"),
    ("CWE-20", "input validation", "improper input validation", "CWE-707", "improper neutralization"),
    ("CWE-200", "information exposure", "exposure of sensitive information to an unauthorized actor", "CWE-668", "resource exposure"),
    ("CWE-264", "permissions privileges access control", "weaknesses in the management of permissions", "CWE-284", "access control"),
    ("CWE-399", "resource management errors", "improper management of system resources", "CWE-664", "resource control"),
    ("CWE-22", "path traversal", "improper limitation of a pathname to a restricted directory", "CWE-706", "incorrectly resolved name"),
    ("CWE-352", "cross site request forgery", "the web application does not verify the request was intentionally provided", "CWE-345", "insufficient verification"),
    ("CWE-94", "code injection", "improper control of generation of code", "CWE-74", "injection"),
]
# CWE indices that positives favor
_EXPLOITED_CWES = (0, 1, 2, 9)

_REFERENCE_SOURCES = ("BID", "CONFIRM", "MISC", "SECUNIA", "VUPEN")
_REFERENCE_HOSTS = ("www.securityfocus.com/bid", "secunia.com/advisories", "www.vupen.com/english/advisories")


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int = 5000
    positive_fraction: float = 0.17
    n_vocab: int = 2000
    drift_rate: float = 1.0
    date_range: Tuple[date, date] = (date(2009, 1, 1), date(2015, 12, 31))
    leak_strength: float = 0.0
    summary_length: int = 30
    signal_window: int = 40
    signal_rate: float = 0.12
    noise_rate: float = 0.04
    silent_fraction: float = 0.15

    def validate(self) -> int:
        """Check the spec and return the exact positive count it implies."""
        if self.n_samples < 10:
            raise InfeasibleSpecError(f"n_samples must be >= 10, got {self.n_samples}")
        if not 0.0 < self.positive_fraction < 1.0:
            raise InfeasibleSpecError(f"positive_fraction must be in (0, 1), got {self.positive_fraction}")
        n_positive = int(round(self.positive_fraction * self.n_samples))
        if n_positive == 0 or n_positive == self.n_samples:
            raise InfeasibleSpecError(
                f"positive_fraction {self.positive_fraction} with n_samples {self.n_samples} "
                f"leaves one class empty"
            )
        if not 0.0 <= self.leak_strength <= 1.0:
            raise InfeasibleSpecError(f"leak_strength must be in [0, 1], got {self.leak_strength}")
        if self.drift_rate < 0:
            raise InfeasibleSpecError("drift_rate must be >= 0")
        if self.date_range[0] > self.date_range[1]:
            raise InfeasibleSpecError("date_range start is after its end")
        if self.signal_window < 1 or self.summary_length < 1:
            raise InfeasibleSpecError("signal_window and summary_length must be >= 1")
        if self.n_vocab < 2 * self.signal_window + 20:
            raise InfeasibleSpecError(f"n_vocab {self.n_vocab} too small for signal_window {self.signal_window}")
        return n_positive


class _Vocabulary:
    def __init__(self, spec: SyntheticSpec, years: float):
        blocks = 1 + int(np.ceil(spec.drift_rate * years))
        self.signal_size = min(spec.signal_window * blocks, spec.n_vocab // 2)
        neutral_size = spec.n_vocab - self.signal_size - 10
        self.neutral = [f"w{i:04d}" for i in range(neutral_size)]
        self.signal = [f"s{i:04d}" for i in range(self.signal_size)]
        self.leak = [f"p{i:02d}" for i in range(10)]
        ranks = np.arange(1, neutral_size + 1, dtype=float)
        self.neutral_p = (1.0 / ranks) / np.sum(1.0 / ranks)
        self.window = spec.signal_window

    def window_start(self, years_elapsed: float, drift_rate: float) -> int:
        start = int(drift_rate * years_elapsed * self.window)
        return min(start, self.signal_size - self.window)


def generate_synthetic_corpus(seed: int, spec: SyntheticSpec) -> Tuple[LabeledCorpus, ExploitMapping]:
    """Build a labeled corpus and its exploit mapping. Same seed and spec, same bytes."""
    n_positive = spec.validate()
    rng = np.random.default_rng(seed)
    n = spec.n_samples
    start, end = spec.date_range
    span_days = (end - start).days
    vocab = _Vocabulary(spec, years=max(span_days, 1) / 365.25)

    offsets = np.sort(rng.integers(0, span_days + 1, size=n))
    positive = np.zeros(n, dtype=bool)
    positive[rng.permutation(n)[:n_positive]] = True
    n_leaked = int(round(spec.leak_strength * n_positive))
    leaked = np.zeros(n, dtype=bool)
    leaked[rng.permutation(np.flatnonzero(positive))[:n_leaked]] = True

    records: List[VulnRecord] = []
    mapping_rows = []
    per_year_sequence = {}
    for i in range(n):
        published = start + timedelta(days=int(offsets[i]))
        sequence = per_year_sequence.get(published.year, 1000)
        per_year_sequence[published.year] = sequence + 1
        cve = CveId(published.year, f"{sequence:04d}")
        is_pos = bool(positive[i])
        summary = _summary(rng, vocab, spec, offsets[i] / 365.25, is_pos, bool(leaked[i]))
        records.append(
            VulnRecord(
                cve=cve,
                published=published,
                summary=summary,
                cvss=_cvss(rng, is_pos),
                cpe_list=_cpes(rng),
                cwe=_cwe(rng, is_pos),
                references=_references(rng, is_pos, i),
            )
        )
        if is_pos:
            if leaked[i]:
                lag = -int(rng.integers(0, 90))
            else:
                lag = int(rng.integers(1, 180))
            mapping_rows.append((cve, str(10000 + i), published + timedelta(days=lag)))

    mapping = ExploitMapping.from_rows(mapping_rows)
    provenance = (
        f"synthetic(seed={seed}, n={n}, positive_fraction={spec.positive_fraction}, "
        f"drift_rate={spec.drift_rate}, leak_strength={spec.leak_strength})"
    )
    corpus = label_corpus(records, mapping, provenance)
    logger.debug(f"Generated {provenance}: {corpus.positive_count} positives, {n_leaked} pre-disclosed")
    return corpus, mapping


def _summary(rng, vocab: _Vocabulary, spec: SyntheticSpec, years_elapsed: float, is_pos: bool, leaked: bool) -> str:
    start = vocab.window_start(years_elapsed, spec.drift_rate)
    silent = is_pos and rng.random() < spec.silent_fraction
    rate = spec.signal_rate if (is_pos and not silent) else spec.noise_rate
    tokens = []
    for _ in range(spec.summary_length):
        if leaked and rng.random() < 0.15:
            tokens.append(vocab.leak[int(rng.integers(0, len(vocab.leak)))])
        elif rng.random() < rate:
            tokens.append(vocab.signal[start + int(rng.integers(0, vocab.window))])
        else:
            tokens.append(vocab.neutral[int(rng.choice(len(vocab.neutral), p=vocab.neutral_p))])
    return " ".join(tokens)


def _pick(rng, levels, weights):
    return levels[int(rng.choice(len(levels), p=weights))]


def _cvss(rng, is_pos: bool) -> CvssVector:
    access = _pick(
        rng,
        (AccessVector.LOCAL, AccessVector.ADJACENT_NETWORK, AccessVector.NETWORK),
        (0.08, 0.02, 0.90) if is_pos else (0.20, 0.05, 0.75),
    )
    complexity = _pick(
        rng,
        (AccessComplexity.HIGH, AccessComplexity.MEDIUM, AccessComplexity.LOW),
        (0.05, 0.30, 0.65) if is_pos else (0.10, 0.45, 0.45),
    )
    auth = _pick(
        rng,
        (Authentication.MULTIPLE, Authentication.SINGLE, Authentication.NONE),
        (0.01, 0.09, 0.90) if is_pos else (0.02, 0.18, 0.80),
    )
    impact_levels = (Impact.NONE, Impact.PARTIAL, Impact.COMPLETE)
    impact_weights = (0.15, 0.65, 0.20) if is_pos else (0.30, 0.55, 0.15)
    score = float(np.clip(rng.normal(6.8 if is_pos else 5.8, 1.8), 0.0, 10.0))
    return CvssVector(
        access_vector=access,
        access_complexity=complexity,
        authentication=auth,
        confidentiality_impact=_pick(rng, impact_levels, impact_weights),
        integrity_impact=_pick(rng, impact_levels, impact_weights),
        availability_impact=_pick(rng, impact_levels, impact_weights),
        base_score=round(score, 1),
    )


def _cpes(rng) -> Tuple[CpeEntry, ...]:
    entries = {}
    for _ in range(int(rng.integers(1, 4))):
        part = _pick(rng, (CpePart.HARDWARE, CpePart.OS, CpePart.APPLICATION), (0.05, 0.20, 0.75))
        vendor = int(rng.integers(0, 60))
        uri = f"vendor{vendor}:product{vendor}_{int(rng.integers(0, 5))}:{int(rng.integers(1, 10))}.{int(rng.integers(0, 10))}"
        entries.setdefault(CpeEntry(part, uri), None)
    return tuple(entries)


def _cwe(rng, is_pos: bool) -> CweInfo:
    if rng.random() < 0.05:
        return CweInfo()
    weights = np.ones(len(_CWE_TABLE))
    if is_pos:
        weights[list(_EXPLOITED_CWES)] = 3.0
    index = int(rng.choice(len(_CWE_TABLE), p=weights / weights.sum()))
    cwe_id, name, description, parent_id, parent_name = _CWE_TABLE[index]
    return CweInfo(
        id=cwe_id,
        name=name,
        description=description,
        parents=(CweParent(parent_id, parent_name, f"{parent_name} weaknesses"),),
    )


def _references(rng, is_pos: bool, index: int) -> Tuple[Reference, ...]:
    refs = []
    for _ in range(int(rng.integers(1, 4))):
        host = _REFERENCE_HOSTS[int(rng.integers(0, len(_REFERENCE_HOSTS)))]
        refs.append(
            Reference(
                ref_type="",
                source=_REFERENCE_SOURCES[int(rng.integers(0, len(_REFERENCE_SOURCES)))],
                url=f"http://{host}/{int(rng.integers(10000, 99999))}",
            )
        )
    # label-leaking references that scrubbing must strip
    if is_pos and rng.random() < 0.3:
        refs.append(
            Reference(ref_type="", source="EXPLOIT-DB", url=f"http://www.exploit-db.com/exploits/{10000 + index}")
        )
    return tuple(refs)


_CHATTER = ("new", "vuln", "patch", "now", "alert", "security", "update", "read", "poc", "details")


def generate_synthetic_tweets(corpus: LabeledCorpus, seed: int, coverage: float = 0.3) -> List[TweetRecord]:
    """Tweets for a random subset of the corpus; exploited CVEs are tweeted about twice as often."""
    rng = np.random.default_rng(seed)
    tweets = []
    for sample in corpus:
        chance = min(1.0, coverage * (2.0 if sample.exploited else 1.0))
        if rng.random() >= chance:
            continue
        words = sample.record.summary.split()
        for k in range(int(rng.integers(1, 6))):
            picked = [words[int(j)] for j in rng.integers(0, len(words), size=min(6, len(words)))] if words else []
            chatter = [_CHATTER[int(j)] for j in rng.integers(0, len(_CHATTER), size=4)]
            body = " ".join([*chatter[:2], str(sample.cve), *picked, *chatter[2:]])
            created = datetime.combine(sample.published, time(12, 0), tzinfo=timezone.utc) + timedelta(
                hours=int(rng.integers(1, 24 * 60))
            )
            followers = int(rng.integers(0, 5000 if sample.exploited else 3000))
            tweets.append(
                TweetRecord(
                    tweet_id=f"{sample.cve}-{k}",
                    created_at=created,
                    body=body,
                    author_friends=int(rng.integers(0, 3000)),
                    author_followers=followers,
                    author_verified=bool(rng.random() < 0.05),
                    author_created_at=created - timedelta(days=int(rng.integers(30, 3000))),
                    retweets=int(rng.poisson(3.0 if sample.exploited else 1.5)),
                    favorites=int(rng.poisson(2.0)),
                    hashtag_count=int(rng.integers(0, 4)),
                    url_count=int(rng.integers(0, 3)),
                    mention_count=int(rng.integers(0, 3)),
                    cve_refs=frozenset([sample.cve]),
                )
            )
    return tweets
