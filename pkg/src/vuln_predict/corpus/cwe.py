import csv
import io
import logging
from dataclasses import dataclass, replace
from typing import IO, Dict, Iterable, List, Tuple

from ..errors import FeedParseError
from .models import CweInfo, CweParent, VulnRecord

logger = logging.getLogger("vuln_predict")


@dataclass(frozen=True)
class CweEntry:
    id: str
    name: str
    description: str
    parent_ids: Tuple[str, ...] = ()


def _normalize_cwe_id(value: str) -> str:
    value = value.strip()
    if value.upper().startswith("CWE-"):
        return "CWE-" + value[4:]
    return f"CWE-{value}"


def _child_of(related: str) -> List[str]:
    """Extract ChildOf targets from a ``::NATURE:ChildOf:CWE ID:20:VIEW ID:1000::`` list."""
    parents: List[str] = []
    for chunk in (related or "").split("::"):
        tokens = chunk.split(":")
        fields = dict(zip(tokens[0::2], tokens[1::2]))
        if fields.get("NATURE") == "ChildOf" and fields.get("CWE ID"):
            parent = _normalize_cwe_id(fields["CWE ID"])
            if parent not in parents:
                parents.append(parent)
    return parents


def load_cwe_catalog(stream: IO[bytes]) -> Dict[str, CweEntry]:
    """Read the MITRE CWE CSV export into ``{"CWE-79": CweEntry, ...}``."""
    reader = csv.DictReader(io.TextIOWrapper(stream, encoding="utf-8-sig", newline=""))
    columns = set(reader.fieldnames or [])
    if not {"CWE-ID", "Name", "Description"} <= columns:
        raise FeedParseError("CWE catalog must have CWE-ID, Name and Description columns", 0)
    catalog = {}
    for row in reader:
        cwe_id = _normalize_cwe_id(row["CWE-ID"])
        catalog[cwe_id] = CweEntry(
            id=cwe_id,
            name=(row.get("Name") or "").strip(),
            description=(row.get("Description") or "").strip(),
            parent_ids=tuple(_child_of(row.get("Related Weaknesses") or "")),
        )
    logger.info(f"CWE catalog: {len(catalog)} weaknesses")
    return catalog


def attach_cwe_details(records: Iterable[VulnRecord], catalog: Dict[str, CweEntry]) -> List[VulnRecord]:
    """Fill CWE names, descriptions and parents from the catalog; unknown ids stay bare."""
    enriched = []
    unknown = set()
    for record in records:
        entry = catalog.get(record.cwe.id or "")
        if entry is None:
            if record.cwe.id:
                unknown.add(record.cwe.id)
            enriched.append(record)
            continue
        parents = []
        for parent_id in entry.parent_ids:
            parent = catalog.get(parent_id)
            parents.append(
                CweParent(parent_id, parent.name, parent.description) if parent else CweParent(parent_id)
            )
        cwe = CweInfo(id=entry.id, name=entry.name, description=entry.description, parents=tuple(parents))
        enriched.append(replace(record, cwe=cwe))
    if unknown:
        logger.debug(f"CWE ids without catalog entry: {', '.join(sorted(unknown))}")
    return enriched
