"""JSONL dataset persistence with validation quarantine and a manifest."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .records import ClaimRecord, RecordDecodeError, loads_record, to_jsonable, validate_record

logger = logging.getLogger(__name__)


class IoError(Exception):
    pass


class QuarantineOnly(Exception):
    """Every input record failed validation; nothing was written."""


@dataclass(frozen=True)
class DatasetManifest:
    language: str
    record_count: int
    quarantined_count: int
    date_range: tuple[str | None, str | None]
    stage_versions: dict[str, str]
    created_at: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "language": self.language,
            "record_count": self.record_count,
            "quarantined_count": self.quarantined_count,
            "date_range": list(self.date_range),
            "stage_versions": self.stage_versions,
            "created_at": self.created_at,
        }


def manifest_path(dataset_path: str | Path) -> Path:
    path = Path(dataset_path)
    return path.with_name(path.name + ".manifest.json")


def quarantine_path(dataset_path: str | Path) -> Path:
    path = Path(dataset_path)
    return path.with_name(path.name + ".quarantine.jsonl")


def write_dataset(
    records: Iterable[ClaimRecord],
    path: str | Path,
    *,
    stage_versions: dict[str, str] | None = None,
) -> DatasetManifest:
    """Write records as one JSON object per line, UTF-8, stable key order.

    Records failing validation land in a quarantine sidecar together with
    their violation list instead of the dataset file.
    """
    path = Path(path)
    valid_lines: list[str] = []
    quarantine_lines: list[str] = []
    languages: set[str] = set()
    dates: list[str] = []
    total = 0
    for record in records:
        total += 1
        violations = validate_record(record)
        if violations:
            quarantine_lines.append(
                json.dumps(
                    {
                        "record": to_jsonable(record),
                        "violations": [{"code": v.code, "message": v.message, "path": v.path} for v in violations],
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
            )
            continue
        valid_lines.append(json.dumps(to_jsonable(record), ensure_ascii=False, separators=(",", ":")))
        languages.add(record.language)
        if record.claim_date:
            dates.append(record.claim_date)
    if total > 0 and not valid_lines:
        raise QuarantineOnly(f"all {total} records failed validation; see {quarantine_path(path)}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(valid_lines) + ("\n" if valid_lines else ""), encoding="utf-8")
        qpath = quarantine_path(path)
        if quarantine_lines:
            qpath.write_text("\n".join(quarantine_lines) + "\n", encoding="utf-8")
        elif qpath.exists():
            qpath.unlink()
    except OSError as exc:
        raise IoError(f"cannot write dataset {path}: {exc}") from exc
    if len(languages) == 1:
        language = next(iter(languages))
    elif languages:
        language = "mixed"
    else:
        language = "none"
    manifest = DatasetManifest(
        language=language,
        record_count=len(valid_lines),
        quarantined_count=len(quarantine_lines),
        date_range=(min(dates), max(dates)) if dates else (None, None),
        stage_versions=dict(stage_versions or {}),
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    try:
        manifest_path(path).write_text(
            json.dumps(manifest.as_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write manifest for {path}: {exc}") from exc
    if quarantine_lines:
        logger.warning("%d of %d records quarantined at %s", len(quarantine_lines), total, quarantine_path(path))
    return manifest


def read_dataset(path: str | Path) -> list[ClaimRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read dataset {path}: {exc}") from exc
    records: list[ClaimRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(loads_record(line))
        except RecordDecodeError as exc:
            raise RecordDecodeError(f"{path}:{lineno}: {exc}") from exc
    return records
