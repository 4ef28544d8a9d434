"""Mapping of publisher rating strings onto the four-label verdict scheme.

The table is a curated TSV asset (see assets/verdicts/rating_map.tsv for
the format). Lookups are total: any string maps to some verdict, with
Fallback provenance marking the rows the table does not know.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .records import VerdictLabel, normalize_ws

logger = logging.getLogger(__name__)

GLOBAL_SITE = "*"
REGEX_PREFIX = "re:"


class Provenance(Enum):
    PUBLISHER_RULE = "PublisherRule"
    GLOBAL_RULE = "GlobalRule"
    FALLBACK = "Fallback"


class MappingError(ValueError):
    pass


def canonical_rating(rating: str) -> str:
    """Casefold and collapse whitespace; accents are left alone."""
    return normalize_ws(rating).casefold()


@dataclass(frozen=True)
class MappingRow:
    publisher_site: str
    rating: str
    verdict: VerdictLabel
    pattern: re.Pattern | None = None

    @property
    def is_regex(self) -> bool:
        return self.pattern is not None


@dataclass(frozen=True)
class MappingTable:
    version: str
    rows: tuple[MappingRow, ...]

    def __post_init__(self) -> None:
        exact: dict[tuple[str, str], VerdictLabel] = {}
        regex_rows: dict[str, list[MappingRow]] = {}
        seen: set[tuple[str, str]] = set()
        for row in self.rows:
            key = (row.publisher_site, row.rating)
            if key in seen:
                raise MappingError(f"duplicate mapping row for {key}")
            seen.add(key)
            if row.is_regex:
                regex_rows.setdefault(row.publisher_site, []).append(row)
            else:
                exact[key] = row.verdict
        object.__setattr__(self, "_exact", exact)
        object.__setattr__(self, "_regex_rows", regex_rows)

    def lookup(self, site: str, canonical: str) -> VerdictLabel | None:
        hit = self._exact.get((site, canonical))
        if hit is not None:
            return hit
        for row in self._regex_rows.get(site, ()):
            if row.pattern.fullmatch(canonical):
                return row.verdict
        return None


def load_mapping_table(path: str | Path) -> MappingTable:
    version = None
    rows: list[MappingRow] = []
    for lineno, raw_line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw_line.rstrip("\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            if version is None and "version:" in line:
                version = line.split("version:", 1)[1].strip()
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MappingError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(parts)}")
        site_raw, rating_raw, verdict_raw = (p.strip() for p in parts)
        if not site_raw or not rating_raw:
            raise MappingError(f"{path}:{lineno}: empty publisher_site or rating")
        try:
            verdict = VerdictLabel(verdict_raw)
        except ValueError as exc:
            raise MappingError(f"{path}:{lineno}: unknown verdict {verdict_raw!r}") from exc
        site = site_raw.casefold() if site_raw != GLOBAL_SITE else GLOBAL_SITE
        if rating_raw.startswith(REGEX_PREFIX):
            expr = rating_raw[len(REGEX_PREFIX):]
            try:
                pattern = re.compile(expr, re.IGNORECASE)
            except re.error as exc:
                raise MappingError(f"{path}:{lineno}: bad regex {expr!r}: {exc}") from exc
            rows.append(MappingRow(site, rating_raw, verdict, pattern=pattern))
        else:
            rows.append(MappingRow(site, canonical_rating(rating_raw), verdict))
    if version is None:
        raise MappingError(f"{path}: missing '# version:' header")
    if not rows:
        raise MappingError(f"{path}: table has no rows")
    return MappingTable(version=version, rows=tuple(rows))


def normalize_rating(
    original_rating: str, publisher_site: str, table: MappingTable
) -> tuple[VerdictLabel, Provenance]:
    """Map one rating string to a verdict.

    Publisher rows win over global rows; within a scope, exact rows win
    over regex rows and regex rows apply in file order. Unknown strings
    fall back to OTHER so the mapping is total.
    """
    canonical = canonical_rating(original_rating)
    site = publisher_site.strip().casefold()
    hit = table.lookup(site, canonical)
    if hit is not None:
        return hit, Provenance.PUBLISHER_RULE
    hit = table.lookup(GLOBAL_SITE, canonical)
    if hit is not None:
        return hit, Provenance.GLOBAL_RULE
    logger.debug("no mapping for rating %r from %s", original_rating, publisher_site)
    return VerdictLabel.OTHER, Provenance.FALLBACK
