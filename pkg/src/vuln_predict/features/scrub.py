from dataclasses import replace

from ..corpus.models import LabeledCorpus, Reference, VulnRecord
from ..utils.parsing_utils import has_exploit_source_marker


def _strip_source(source: str) -> str:
    return " ".join(token for token in source.split() if not has_exploit_source_marker(token))


def scrub_exploit_sources(record: VulnRecord) -> VulnRecord:
    """Remove references that would reveal the label.

    A reference whose URL names an exploit archive is deleted outright; archive
    tokens are dropped from the remaining references' source field.
    """
    kept = []
    for ref in record.references:
        if has_exploit_source_marker(ref.url):
            continue
        source = _strip_source(ref.source)
        kept.append(ref if source == ref.source else Reference(ref.ref_type, source, ref.url))
    references = tuple(kept)
    if references == record.references:
        return record
    return replace(record, references=references)


def scrub_corpus(corpus: LabeledCorpus) -> LabeledCorpus:
    samples = [replace(s, record=scrub_exploit_sources(s.record)) for s in corpus]
    return LabeledCorpus(tuple(samples), corpus.provenance)
