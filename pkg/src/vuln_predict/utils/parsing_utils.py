import calendar
import re
from datetime import date, datetime, timezone
from typing import List, Optional

# four-digit year, four or more sequence digits
CVE_ID_PATTERN = re.compile(r"CVE-(\d{4})-(\d{4,})", re.IGNORECASE)

_TOKEN_PATTERN = re.compile(r"[a-z0-9]{2,}")

# Exploit databases whose mention in a record would leak the label.
EXPLOIT_SOURCE_MARKERS = ("exploit-db", "exploitdb", "milw0rm", "osvdb")


def normalize_dash(text: str) -> str:
    # EDB and tweets occasionally use an en dash inside CVE-IDs
    return text.replace("–", "-").replace("‑", "-")


def extract_cve_tokens(text: str) -> List[str]:
    """Return canonical CVE-ID strings found in free text, in order of appearance."""
    found = []
    for match in CVE_ID_PATTERN.finditer(normalize_dash(text or "")):
        found.append(f"CVE-{match.group(1)}-{match.group(2)}")
    return found


def tokenize(text: str) -> List[str]:
    """Lowercase alphanumeric runs of length >= 2."""
    return _TOKEN_PATTERN.findall((text or "").lower())


def has_exploit_source_marker(text: str) -> bool:
    lowered = (text or "").lower()
    return any(marker in lowered for marker in EXPLOIT_SOURCE_MARKERS)


def parse_utc_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    parsed = datetime.fromisoformat(text)
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def parse_utc_date(value: str) -> date:
    """Parse an ISO-8601 date or timestamp down to its UTC calendar day."""
    text = value.strip()
    if len(text) == 10:
        return date.fromisoformat(text)
    return parse_utc_timestamp(text).date()


def parse_optional_date(value: Optional[str]) -> Optional[date]:
    if value is None or not str(value).strip():
        return None
    return parse_utc_date(str(value))


def add_months(day: date, months: int) -> date:
    month_index = day.month - 1 + months
    year = day.year + month_index // 12
    month = month_index % 12 + 1
    last_day = calendar.monthrange(year, month)[1]
    return date(year, month, min(day.day, last_day))
