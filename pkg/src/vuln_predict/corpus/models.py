from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple

_CVE_EXACT = re.compile(r"^CVE-(\d{4})-(\d{4,})$", re.IGNORECASE)


@dataclass(frozen=True)
class CveId:
    year: int
    sequence: str

    def __post_init__(self):
        if not (len(self.sequence) >= 4 and self.sequence.isdigit()):
            raise ValueError(f"CVE sequence must be at least 4 digits, got {self.sequence!r}")

    @classmethod
    def parse(cls, text: str) -> "CveId":
        match = _CVE_EXACT.match((text or "").strip())
        if not match:
            raise ValueError(f"Not a valid CVE-ID: {text!r}")
        return cls(int(match.group(1)), match.group(2))

    @property
    def sort_key(self) -> Tuple[int, int, str]:
        # numeric order on the sequence; CVE-2014-10001 sorts after CVE-2014-9999
        return (self.year, int(self.sequence), self.sequence)

    def __lt__(self, other: "CveId") -> bool:
        if not isinstance(other, CveId):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return f"CVE-{self.year}-{self.sequence}"


class AccessVector(str, Enum):
    LOCAL = "LOCAL"
    ADJACENT_NETWORK = "ADJACENT_NETWORK"
    NETWORK = "NETWORK"
    MISSING = "MISSING"


class AccessComplexity(str, Enum):
    HIGH = "HIGH"
    MEDIUM = "MEDIUM"
    LOW = "LOW"
    MISSING = "MISSING"


class Authentication(str, Enum):
    MULTIPLE = "MULTIPLE"
    SINGLE = "SINGLE"
    NONE = "NONE"
    MISSING = "MISSING"


class Impact(str, Enum):
    NONE = "NONE"
    PARTIAL = "PARTIAL"
    COMPLETE = "COMPLETE"
    MISSING = "MISSING"


# CVSS v2 vector-string abbreviations (AV:N/AC:L/Au:N/C:P/I:P/A:P)
_VECTOR_CODES = {
    "AV": ("access_vector", AccessVector, {"L": "LOCAL", "A": "ADJACENT_NETWORK", "N": "NETWORK"}),
    "AC": ("access_complexity", AccessComplexity, {"H": "HIGH", "M": "MEDIUM", "L": "LOW"}),
    "Au": ("authentication", Authentication, {"M": "MULTIPLE", "S": "SINGLE", "N": "NONE"}),
    "C": ("confidentiality_impact", Impact, {"N": "NONE", "P": "PARTIAL", "C": "COMPLETE"}),
    "I": ("integrity_impact", Impact, {"N": "NONE", "P": "PARTIAL", "C": "COMPLETE"}),
    "A": ("availability_impact", Impact, {"N": "NONE", "P": "PARTIAL", "C": "COMPLETE"}),
}


def _enum_literal(enum_cls, value) -> Enum:
    """Map a feed literal onto an enum member; raise ValueError for unknown literals."""
    if isinstance(value, enum_cls):
        return value
    literal = str(value).strip().upper().replace(" ", "_")
    if literal == "ADJACENT":
        literal = "ADJACENT_NETWORK"
    if literal == "MULTIPLE_INSTANCES":
        literal = "MULTIPLE"
    if literal == "SINGLE_INSTANCE":
        literal = "SINGLE"
    try:
        return enum_cls(literal)
    except ValueError:
        raise ValueError(f"Unknown {enum_cls.__name__} literal {value!r}") from None


@dataclass(frozen=True)
class CvssVector:
    access_vector: AccessVector
    access_complexity: AccessComplexity
    authentication: Authentication
    confidentiality_impact: Impact
    integrity_impact: Impact
    availability_impact: Impact
    base_score: Optional[float]

    def __post_init__(self):
        if self.base_score is not None and not (0.0 <= self.base_score <= 10.0):
            raise ValueError(f"CVSS base score out of range: {self.base_score}")

    @classmethod
    def missing(cls) -> "CvssVector":
        return cls(
            AccessVector.MISSING,
            AccessComplexity.MISSING,
            Authentication.MISSING,
            Impact.MISSING,
            Impact.MISSING,
            Impact.MISSING,
            None,
        )

    @property
    def is_missing(self) -> bool:
        return self == CvssVector.missing()

    @classmethod
    def from_fields(cls, fields: Mapping[str, object]) -> "CvssVector":
        """Build from snake_case or NVD camelCase keys."""

        def pick(snake: str, camel: str):
            if snake in fields:
                return fields[snake]
            if camel in fields:
                return fields[camel]
            raise ValueError(f"CVSS field {snake!r} missing")

        score = fields.get("base_score", fields.get("baseScore"))
        return cls(
            access_vector=_enum_literal(AccessVector, pick("access_vector", "accessVector")),
            access_complexity=_enum_literal(AccessComplexity, pick("access_complexity", "accessComplexity")),
            authentication=_enum_literal(Authentication, pick("authentication", "authentication")),
            confidentiality_impact=_enum_literal(Impact, pick("confidentiality_impact", "confidentialityImpact")),
            integrity_impact=_enum_literal(Impact, pick("integrity_impact", "integrityImpact")),
            availability_impact=_enum_literal(Impact, pick("availability_impact", "availabilityImpact")),
            base_score=None if score is None else float(score),
        )

    @classmethod
    def from_vector_string(cls, vector: str, base_score: Optional[float] = None) -> "CvssVector":
        values: Dict[str, Enum] = {}
        for part in vector.strip().strip("()").split("/"):
            if ":" not in part:
                continue
            code, letter = part.split(":", 1)
            if code not in _VECTOR_CODES:
                raise ValueError(f"Unknown CVSS v2 metric {code!r} in {vector!r}")
            name, enum_cls, letters = _VECTOR_CODES[code]
            if letter not in letters:
                raise ValueError(f"Unknown value {letter!r} for CVSS metric {code}")
            values[name] = enum_cls(letters[letter])
        if len(values) != len(_VECTOR_CODES):
            raise ValueError(f"Incomplete CVSS v2 vector {vector!r}")
        return cls(base_score=base_score, **values)


class CpePart(str, Enum):
    HARDWARE = "h"
    OS = "o"
    APPLICATION = "a"


@dataclass(frozen=True)
class CpeEntry:
    part: CpePart
    uri: str

    def __post_init__(self):
        if not self.uri:
            raise ValueError("CPE uri must not be empty")

    @classmethod
    def parse(cls, cpe: str) -> "CpeEntry":
        """Accept CPE 2.2 (cpe:/a:vendor:product:version) and 2.3 formatted strings."""
        text = cpe.strip()
        if text.startswith("cpe:2.3:"):
            fields = text[len("cpe:2.3:"):].split(":")
            letter, rest = fields[0], fields[1:]
            # 2.3 pads every attribute; drop the trailing wildcards
            while rest and rest[-1] in ("*", "-", ""):
                rest.pop()
        elif text.startswith("cpe:/"):
            fields = text[len("cpe:/"):].split(":")
            letter, rest = fields[0], fields[1:]
        else:
            raise ValueError(f"Unrecognized CPE string {cpe!r}")
        try:
            part = CpePart(letter.lower())
        except ValueError:
            raise ValueError(f"Unknown CPE part {letter!r} in {cpe!r}") from None
        return cls(part, ":".join(rest))

    def __str__(self) -> str:
        return f"cpe:/{self.part.value}:{self.uri}"


@dataclass(frozen=True)
class CweParent:
    id: str
    name: str = ""
    description: str = ""


@dataclass(frozen=True)
class CweInfo:
    id: Optional[str] = None
    name: str = ""
    description: str = ""
    parents: Tuple[CweParent, ...] = ()

    @property
    def parent_count(self) -> int:
        return len(self.parents)


@dataclass(frozen=True)
class Reference:
    ref_type: str
    source: str
    url: str

    def __post_init__(self):
        if not self.url:
            raise ValueError("Reference url must not be empty")


@dataclass(frozen=True)
class VulnRecord:
    cve: CveId
    published: date
    summary: str
    cvss: CvssVector
    cpe_list: Tuple[CpeEntry, ...] = ()
    cwe: CweInfo = field(default_factory=CweInfo)
    references: Tuple[Reference, ...] = ()


@dataclass(frozen=True)
class ExploitEntry:
    exploit_id: str
    published: Optional[date]


@dataclass(frozen=True)
class ExploitMapping:
    """CVE-ID -> exploits referencing it. Treat as read-only after construction."""

    entries: Mapping[CveId, FrozenSet[ExploitEntry]] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[CveId, str, Optional[date]]]) -> "ExploitMapping":
        """Merge (cve, exploit_id, date) rows; repeated pairs keep the earliest known date."""
        merged: Dict[CveId, Dict[str, Optional[date]]] = {}
        for cve, exploit_id, published in rows:
            exploits = merged.setdefault(cve, {})
            if exploit_id in exploits:
                known = exploits[exploit_id]
                if known is None:
                    exploits[exploit_id] = published
                elif published is not None:
                    exploits[exploit_id] = min(known, published)
            else:
                exploits[exploit_id] = published
        return cls(
            {
                cve: frozenset(ExploitEntry(eid, day) for eid, day in exploits.items())
                for cve, exploits in merged.items()
            }
        )

    def __contains__(self, cve: object) -> bool:
        return cve in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def exploits_for(self, cve: CveId) -> FrozenSet[ExploitEntry]:
        return self.entries.get(cve, frozenset())

    def earliest_date(self, cve: CveId) -> Optional[date]:
        dates = [e.published for e in self.exploits_for(cve) if e.published is not None]
        return min(dates) if dates else None

    def rows(self) -> List[Tuple[CveId, str, Optional[date]]]:
        """Flattened rows in (cve, exploit_id) order."""
        out = []
        for cve in sorted(self.entries):
            for entry in sorted(self.entries[cve], key=lambda e: e.exploit_id):
                out.append((cve, entry.exploit_id, entry.published))
        return out


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    created_at: datetime
    body: str
    author_friends: int
    author_followers: int
    author_verified: bool
    author_created_at: datetime
    retweets: int
    favorites: int
    hashtag_count: int
    url_count: int
    mention_count: int
    cve_refs: FrozenSet[CveId]

    def __post_init__(self):
        for name in (
            "author_friends", "author_followers", "retweets", "favorites",
            "hashtag_count", "url_count", "mention_count",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.author_created_at > self.created_at:
            raise ValueError("author_created_at is later than created_at")


@dataclass(frozen=True)
class LabeledSample:
    record: VulnRecord
    exploited: bool
    earliest_exploit_date: Optional[date] = None

    def __post_init__(self):
        if self.earliest_exploit_date is not None and not self.exploited:
            raise ValueError(f"{self.record.cve} has an exploit date but is not labeled exploited")

    @property
    def cve(self) -> CveId:
        return self.record.cve

    @property
    def published(self) -> date:
        return self.record.published

    @property
    def label(self) -> int:
        return 1 if self.exploited else -1


def _sample_order(sample: LabeledSample):
    return (sample.record.published, sample.record.cve.sort_key)


@dataclass(frozen=True)
class LabeledCorpus:
    samples: Tuple[LabeledSample, ...]
    provenance: str = ""

    def __post_init__(self):
        seen = set()
        previous = None
        for sample in self.samples:
            if sample.cve in seen:
                raise ValueError(f"Duplicate CVE-ID in corpus: {sample.cve}")
            seen.add(sample.cve)
            key = _sample_order(sample)
            if previous is not None and key < previous:
                raise ValueError("Corpus samples must be sorted by published date, then CVE-ID")
            previous = key

    @classmethod
    def from_samples(cls, samples: Iterable[LabeledSample], provenance: str = "") -> "LabeledCorpus":
        return cls(tuple(sorted(samples, key=_sample_order)), provenance)

    def derive(self, samples: Iterable[LabeledSample], note: str) -> "LabeledCorpus":
        """A new corpus built from a selection of this one's samples."""
        provenance = f"{self.provenance}; {note}" if self.provenance else note
        return LabeledCorpus.from_samples(samples, provenance)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[LabeledSample]:
        return iter(self.samples)

    @property
    def date_range(self) -> Optional[Tuple[date, date]]:
        if not self.samples:
            return None
        return (self.samples[0].published, self.samples[-1].published)

    @property
    def positive_count(self) -> int:
        return sum(1 for s in self.samples if s.exploited)

    @property
    def negative_count(self) -> int:
        return len(self.samples) - self.positive_count

    @property
    def positive_fraction(self) -> float:
        if not self.samples:
            return 0.0
        return self.positive_count / len(self.samples)

    @property
    def cve_ids(self) -> List[CveId]:
        return [s.cve for s in self.samples]

    def labels(self) -> List[int]:
        return [s.label for s in self.samples]


@dataclass
class ParseReport:
    """Per-record problems collected while parsing one input stream."""

    source: str = ""
    accepted: int = 0
    dropped: int = 0
    rejected: List[Tuple[str, str]] = field(default_factory=list)

    def reject(self, location: str, message: str) -> None:
        self.rejected.append((location, message))

    @property
    def ok(self) -> bool:
        return not self.rejected

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "accepted": self.accepted,
            "dropped": self.dropped,
            "rejected": [{"location": loc, "message": msg} for loc, msg in self.rejected],
        }
