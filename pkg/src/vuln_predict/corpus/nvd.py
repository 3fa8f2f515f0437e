import json
import logging
from enum import Enum
from typing import IO, Any, Dict, Iterable, List, Optional, Tuple

from ..errors import FeedParseError
from ..utils.parsing_utils import parse_utc_date
from .models import (
    CpeEntry,
    CveId,
    CvssVector,
    CweInfo,
    CweParent,
    ParseReport,
    Reference,
    VulnRecord,
)

logger = logging.getLogger("vuln_predict")


class FeedFormat(str, Enum):
    NVD_JSON_FEED = "nvd_json_feed"
    CANONICAL_JSONL = "canonical_jsonl"


def parse_nvd_feed(stream: IO[bytes], format: FeedFormat) -> List[VulnRecord]:
    """Parse a vulnerability feed; per-entry rejects are logged, not raised."""
    records, report = parse_nvd_feed_with_report(stream, format)
    if report.rejected:
        logger.warning(f"{len(report.rejected)} feed entries rejected ({report.accepted} accepted)")
    return records


def parse_nvd_feed_with_report(
    stream: IO[bytes], format: FeedFormat, source: str = ""
) -> Tuple[List[VulnRecord], ParseReport]:
    raw = stream.read()
    report = ParseReport(source=source)
    if FeedFormat(format) == FeedFormat.CANONICAL_JSONL:
        records = _parse_canonical_jsonl(raw, report)
    else:
        records = _parse_nvd_json(raw, report)
    report.accepted = len(records)
    for location, message in report.rejected:
        logger.debug(f"Rejected {location}: {message}")
    return records, report


def _decode(raw: bytes) -> str:
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise FeedParseError(f"Feed is not valid UTF-8: {e.reason}", e.start) from e


def _parse_nvd_json(raw: bytes, report: ParseReport) -> List[VulnRecord]:
    text = _decode(raw)
    if not text.strip():
        return []
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise FeedParseError(f"Malformed NVD JSON feed: {e.msg}", offset) from e

    if isinstance(document, dict) and "CVE_Items" in document:
        items, convert = document["CVE_Items"], _record_from_feed_v1
    elif isinstance(document, dict) and "vulnerabilities" in document:
        items, convert = document["vulnerabilities"], _record_from_feed_v2
    else:
        raise FeedParseError("Unrecognized NVD feed layout (expected CVE_Items or vulnerabilities)", 0)

    records = []
    for index, item in enumerate(items):
        try:
            records.append(convert(item))
        except (KeyError, TypeError, ValueError) as e:
            report.reject(_entry_location(item, index), _describe(e))
    return records


def _entry_location(item: Any, index: int) -> str:
    try:
        cve = item.get("cve", {})
        return cve.get("id") or cve["CVE_data_meta"]["ID"]
    except (AttributeError, KeyError, TypeError):
        return f"entry {index}"


def _describe(error: Exception) -> str:
    if isinstance(error, KeyError):
        return f"missing field {error.args[0]!r}"
    return str(error)


def _english(descriptions: Iterable[Dict[str, Any]]) -> str:
    fallback = ""
    for d in descriptions or []:
        if d.get("lang") == "en":
            return d.get("value", "")
        fallback = fallback or d.get("value", "")
    return fallback


def _cpe_entries(criteria: Iterable[str]) -> Tuple[CpeEntry, ...]:
    seen = {}
    for uri in criteria:
        if uri:
            entry = CpeEntry.parse(uri)
            seen.setdefault(entry, None)
    return tuple(seen)


def _walk_v1_nodes(nodes: Iterable[Dict[str, Any]]) -> Iterable[str]:
    for node in nodes or []:
        for match in node.get("cpe_match", []):
            if match.get("vulnerable", True):
                yield match.get("cpe23Uri") or match.get("cpe22Uri")
        yield from _walk_v1_nodes(node.get("children", []))


def _first_cwe(problem_values: Iterable[str]) -> CweInfo:
    for value in problem_values:
        if value:
            return CweInfo(id=value)
    return CweInfo()


def _record_from_feed_v1(item: Dict[str, Any]) -> VulnRecord:
    cve = item["cve"]
    base_v2 = (item.get("impact") or {}).get("baseMetricV2")
    if base_v2 and base_v2.get("cvssV2"):
        cvss = CvssVector.from_fields(base_v2["cvssV2"])
    else:
        cvss = CvssVector.missing()

    problem_values = [
        d.get("value")
        for problem in cve.get("problemtype", {}).get("problemtype_data", [])
        for d in problem.get("description", [])
    ]
    references = tuple(
        Reference(ref_type=" ".join(ref.get("tags", [])), source=ref.get("refsource", ""), url=ref["url"])
        for ref in cve.get("references", {}).get("reference_data", [])
        if ref.get("url")
    )
    return VulnRecord(
        cve=CveId.parse(cve["CVE_data_meta"]["ID"]),
        published=parse_utc_date(item["publishedDate"]),
        summary=_english(cve.get("description", {}).get("description_data", [])),
        cvss=cvss,
        cpe_list=_cpe_entries(_walk_v1_nodes((item.get("configurations") or {}).get("nodes", []))),
        cwe=_first_cwe(problem_values),
        references=references,
    )


def _record_from_feed_v2(item: Dict[str, Any]) -> VulnRecord:
    cve = item["cve"]
    metrics_v2 = (cve.get("metrics") or {}).get("cvssMetricV2") or []
    if metrics_v2:
        data = metrics_v2[0]["cvssData"]
        if "accessVector" in data:
            cvss = CvssVector.from_fields(data)
        else:
            cvss = CvssVector.from_vector_string(data["vectorString"], data.get("baseScore"))
    else:
        cvss = CvssVector.missing()

    criteria = [
        match.get("criteria")
        for config in cve.get("configurations", [])
        for node in config.get("nodes", [])
        for match in node.get("cpeMatch", [])
        if match.get("vulnerable", True)
    ]
    problem_values = [
        d.get("value")
        for weakness in cve.get("weaknesses", [])
        for d in weakness.get("description", [])
    ]
    references = tuple(
        Reference(ref_type=" ".join(ref.get("tags", [])), source=ref.get("source", ""), url=ref["url"])
        for ref in cve.get("references", [])
        if ref.get("url")
    )
    return VulnRecord(
        cve=CveId.parse(cve["id"]),
        published=parse_utc_date(cve["published"]),
        summary=_english(cve.get("descriptions", [])),
        cvss=cvss,
        cpe_list=_cpe_entries(criteria),
        cwe=_first_cwe(problem_values),
        references=references,
    )


# ---------------------------------------------------------------------------
# Canonical JSONL
# ---------------------------------------------------------------------------


def record_to_canonical(record: VulnRecord) -> Dict[str, Any]:
    cvss: Optional[Dict[str, Any]] = None
    if not record.cvss.is_missing:
        c = record.cvss
        cvss = {
            "access_vector": c.access_vector.value,
            "access_complexity": c.access_complexity.value,
            "authentication": c.authentication.value,
            "confidentiality_impact": c.confidentiality_impact.value,
            "integrity_impact": c.integrity_impact.value,
            "availability_impact": c.availability_impact.value,
            "base_score": c.base_score,
        }
    return {
        "cve": str(record.cve),
        "published": record.published.isoformat(),
        "summary": record.summary,
        "cvss": cvss,
        "cpe": [str(entry) for entry in record.cpe_list],
        "cwe": {
            "id": record.cwe.id,
            "name": record.cwe.name,
            "description": record.cwe.description,
            "parents": [
                {"id": p.id, "name": p.name, "description": p.description}
                for p in record.cwe.parents
            ],
        },
        "references": [
            {"type": r.ref_type, "source": r.source, "url": r.url} for r in record.references
        ],
    }


def record_from_canonical(obj: Dict[str, Any]) -> VulnRecord:
    cvss_fields = obj.get("cvss")
    cwe = obj.get("cwe") or {}
    return VulnRecord(
        cve=CveId.parse(obj["cve"]),
        published=parse_utc_date(obj["published"]),
        summary=obj["summary"] or "",
        cvss=CvssVector.missing() if cvss_fields is None else CvssVector.from_fields(cvss_fields),
        cpe_list=tuple(CpeEntry.parse(c) for c in obj.get("cpe", [])),
        cwe=CweInfo(
            id=cwe.get("id"),
            name=cwe.get("name", ""),
            description=cwe.get("description", ""),
            parents=tuple(
                CweParent(p["id"], p.get("name", ""), p.get("description", ""))
                for p in cwe.get("parents", [])
            ),
        ),
        references=tuple(
            Reference(ref_type=r.get("type", ""), source=r.get("source", ""), url=r["url"])
            for r in obj.get("references", [])
        ),
    )


def dumps_canonical(record: VulnRecord) -> str:
    return json.dumps(record_to_canonical(record), ensure_ascii=False, separators=(",", ":"))


def write_canonical_jsonl(records: Iterable[VulnRecord]) -> str:
    """Render records as canonical JSONL text (one object per line)."""
    return "".join(dumps_canonical(r) + "\n" for r in records)


def _parse_canonical_jsonl(raw: bytes, report: ParseReport) -> List[VulnRecord]:
    records = []
    offset = 0
    for line_no, line in enumerate(raw.split(b"\n"), start=1):
        line_offset = offset
        offset += len(line) + 1
        if not line.strip():
            continue
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FeedParseError(f"Line {line_no} is not valid UTF-8", line_offset + e.start) from e
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            position = line_offset + len(text[: e.pos].encode("utf-8"))
            raise FeedParseError(f"Malformed JSON on line {line_no}: {e.msg}", position) from e
        if not isinstance(obj, dict):
            raise FeedParseError(f"Line {line_no} is not a JSON object", line_offset)
        try:
            records.append(record_from_canonical(obj))
        except (KeyError, TypeError, ValueError) as e:
            report.reject(str(obj.get("cve", f"line {line_no}")), _describe(e))
    return records
