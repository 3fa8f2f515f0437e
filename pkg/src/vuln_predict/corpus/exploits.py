import csv
import io
import logging
from typing import IO, Iterable, List, Tuple

from ..errors import FeedParseError
from ..utils.parsing_utils import extract_cve_tokens, parse_optional_date
from .models import (
    CveId,
    ExploitMapping,
    LabeledCorpus,
    LabeledSample,
    ParseReport,
    VulnRecord,
)

logger = logging.getLogger("vuln_predict")

MAPPING_HEADER = ["cve", "exploit_id", "published"]


def _text_reader(stream: IO[bytes]) -> io.TextIOWrapper:
    return io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")


def load_exploit_mapping(stream: IO[bytes]) -> ExploitMapping:
    mapping, report = load_exploit_mapping_with_report(stream)
    if report.rejected:
        logger.warning(f"{len(report.rejected)} exploit mapping rows skipped")
    return mapping


def load_exploit_mapping_with_report(
    stream: IO[bytes], source: str = ""
) -> Tuple[ExploitMapping, ParseReport]:
    """Read the ``cve,exploit_id,published`` CSV; bad rows are collected and skipped."""
    report = ParseReport(source=source)
    reader = csv.reader(_text_reader(stream))
    header = next(reader, None)
    if header is None:
        return ExploitMapping(), report
    if [h.strip().lower() for h in header] != MAPPING_HEADER:
        raise FeedParseError(f"Exploit mapping header must be {','.join(MAPPING_HEADER)}, got {','.join(header)}", 0)

    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != 3:
            report.reject(f"line {line_no}", f"expected 3 columns, got {len(row)}")
            continue
        cve_text, exploit_id, published = (cell.strip() for cell in row)
        try:
            cve = CveId.parse(cve_text)
            day = parse_optional_date(published)
        except ValueError as e:
            report.reject(f"line {line_no}", str(e))
            continue
        if not exploit_id:
            report.reject(f"line {line_no}", "empty exploit_id")
            continue
        rows.append((cve, exploit_id, day))

    mapping = ExploitMapping.from_rows(rows)
    report.accepted = len(rows)
    report.dropped = len(rows) - sum(len(v) for v in mapping.entries.values())
    logger.info(f"Exploit mapping: {len(rows)} rows, {len(mapping)} unique CVEs")
    return mapping, report


def load_edb_index(stream: IO[bytes]) -> ExploitMapping:
    mapping, _ = load_edb_index_with_report(stream)
    return mapping


def load_edb_index_with_report(stream: IO[bytes], source: str = "") -> Tuple[ExploitMapping, ParseReport]:
    """Build a mapping from the Exploit Database ``files_exploits.csv`` index.

    CVE-IDs are pulled out of the ``codes`` column (``CVE-2015-1234;OSVDB-...``);
    rows without a CVE code are counted as dropped.
    """
    report = ParseReport(source=source)
    reader = csv.DictReader(_text_reader(stream))
    fields = {name.strip().lower(): name for name in (reader.fieldnames or [])}
    if "id" not in fields or "codes" not in fields:
        raise FeedParseError("EDB index must have 'id' and 'codes' columns", 0)
    date_field = fields.get("date_published") or fields.get("date")

    rows = []
    for line_no, row in enumerate(reader, start=2):
        exploit_id = (row.get(fields["id"]) or "").strip()
        cves = extract_cve_tokens(row.get(fields["codes"]) or "")
        if not cves:
            report.dropped += 1
            continue
        try:
            day = parse_optional_date(row.get(date_field)) if date_field else None
        except ValueError as e:
            report.reject(f"line {line_no}", str(e))
            continue
        for cve_text in cves:
            try:
                rows.append((CveId.parse(cve_text), exploit_id, day))
            except ValueError as e:
                report.reject(f"line {line_no}", str(e))

    mapping = ExploitMapping.from_rows(rows)
    report.accepted = len(rows)
    logger.info(f"EDB index: {len(rows)} CVE references, {len(mapping)} unique CVEs")
    return mapping, report


def write_exploit_mapping_csv(mapping: ExploitMapping) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MAPPING_HEADER)
    for cve, exploit_id, published in mapping.rows():
        writer.writerow([str(cve), exploit_id, published.isoformat() if published else ""])
    return out.getvalue()


def label_corpus(
    vulns: Iterable[VulnRecord], mapping: ExploitMapping, provenance: str = ""
) -> LabeledCorpus:
    """Join records with the exploit mapping by CVE-ID.

    A record is positive iff its CVE-ID is a mapping key. Repeated CVE-IDs keep
    the first record seen.
    """
    samples: List[LabeledSample] = []
    seen = set()
    duplicates = 0
    for record in vulns:
        if record.cve in seen:
            duplicates += 1
            continue
        seen.add(record.cve)
        exploited = record.cve in mapping
        samples.append(
            LabeledSample(
                record=record,
                exploited=exploited,
                earliest_exploit_date=mapping.earliest_date(record.cve) if exploited else None,
            )
        )
    if duplicates:
        logger.warning(f"Ignored {duplicates} duplicate CVE records while labeling")
    return LabeledCorpus.from_samples(samples, provenance)
