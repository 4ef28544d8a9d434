"""Core record types shared by every pipeline stage.

A dataset is a sequence of ClaimRecord objects. Stages only ever add
information to a record (article, verdict, evidence, ...), so the types
here are immutable and enriched via dataclasses.replace.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum
from typing import Any

SUPPORTED_LANGUAGES = ("fr", "de")


class VerdictLabel(Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    PARTIALLY_TRUE = "partially-true"
    OTHER = "other"


class ContentType(Enum):
    TEXT = "Text"
    IMAGE = "Image"
    VIDEO = "Video"
    STATISTIC = "Statistic"


class EvidenceCategory(Enum):
    EXPERT_TESTIMONY = "ExpertTestimony"
    QUANTITATIVE_DATA = "QuantitativeData"
    OFFICIAL_RECORDS = "OfficialRecords"
    MEDIA_RECORD = "MediaRecord"
    MULTIMEDIA_EVIDENCE = "MultimediaEvidence"
    EYEWITNESS_ACCOUNT = "EyewitnessAccount"


class JustificationMode(Enum):
    TEXT_ONLY = "TextOnly"
    MULTIMODAL = "Multimodal"


class JudgeTask(Enum):
    EVIDENCE_EXTRACTION = "EvidenceExtraction"
    JUSTIFICATION_GENERATION = "JustificationGeneration"


class Criterion(Enum):
    COHERENCE = "coherence"
    CORRECTNESS = "correctness"
    COMPLETENESS = "completeness"


def normalize_ws(text: str) -> str:
    """Collapse runs of whitespace to single spaces and trim the ends."""
    return " ".join(text.split())


def record_id(review_url: str, claim_text: str) -> str:
    """Stable record identifier: hex sha256 over the url/claim pair."""
    payload = review_url + "\n" + claim_text
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ImageRef:
    id: str
    src_url: str
    caption: str | None = None
    local_path: str | None = None


@dataclass(frozen=True)
class VideoRef:
    id: str
    src_url: str
    local_path: str | None = None
    duration_s: float | None = None


@dataclass(frozen=True)
class ArticleContent:
    url: str
    paragraphs: tuple[str, ...]
    images: tuple[ImageRef, ...] = ()
    videos: tuple[VideoRef, ...] = ()
    fetched_at: str | None = None

    def media_ids(self) -> set[str]:
        return {m.id for m in self.images} | {m.id for m in self.videos}


@dataclass(frozen=True)
class SourceLocator:
    """Pointer from an evidence item back into the article.

    kind is one of "paragraph", "image", "video_frame". Paragraph locators
    use a 0-based index and may carry an optional character span; media
    locators carry the media id, and video frames a timestamp in seconds.
    """

    kind: str
    paragraph_index: int | None = None
    media_id: str | None = None
    timestamp_s: float | None = None
    char_span: tuple[int, int] | None = None

    PARAGRAPH = "paragraph"
    IMAGE = "image"
    VIDEO_FRAME = "video_frame"

    def __post_init__(self) -> None:
        if self.kind == self.PARAGRAPH:
            if self.paragraph_index is None or self.paragraph_index < 0:
                raise ValueError("paragraph locator needs a non-negative index")
        elif self.kind in (self.IMAGE, self.VIDEO_FRAME):
            if not self.media_id:
                raise ValueError(f"{self.kind} locator needs a media_id")
            if self.kind == self.VIDEO_FRAME:
                if self.timestamp_s is None or self.timestamp_s < 0:
                    raise ValueError("video_frame locator needs timestamp_s >= 0")
        else:
            raise ValueError(f"unknown locator kind: {self.kind!r}")
        if self.char_span is not None:
            start, end = self.char_span
            if start < 0 or end < start:
                raise ValueError("char_span must satisfy 0 <= start <= end")


@dataclass(frozen=True)
class EvidenceItem:
    category: EvidenceCategory
    text: str
    locator: SourceLocator
    is_quote: bool
    media_ref: str | None = None


@dataclass(frozen=True)
class EvidenceSet:
    claim_id: str
    items: tuple[EvidenceItem, ...]
    model_id: str
    template_version: str

    def by_category(self) -> dict[EvidenceCategory, tuple[EvidenceItem, ...]]:
        grouped: dict[EvidenceCategory, list[EvidenceItem]] = {}
        for item in self.items:
            grouped.setdefault(item.category, []).append(item)
        return {cat: tuple(items) for cat, items in grouped.items()}


@dataclass(frozen=True)
class Justification:
    mode: JustificationMode
    text: str
    evidence_refs: tuple[int, ...]
    model_id: str
    generated_at: str


@dataclass(frozen=True)
class EvaluationScore:
    task: JudgeTask
    criterion: Criterion
    score: float
    rationale: str
    judge_model_id: str


@dataclass(frozen=True)
class ClaimRecord:
    id: str
    language: str
    claim_text: str
    publisher: str
    review_url: str
    review_title: str
    original_rating: str
    verdict: VerdictLabel
    claimant: str | None = None
    claim_date: str | None = None
    content_type: ContentType | None = None
    article: ArticleContent | None = None
    evidence: EvidenceSet | None = None
    justifications: tuple[Justification, ...] = ()
    evaluations: tuple[EvaluationScore, ...] = ()


@dataclass(frozen=True)
class Violation:
    """One validation failure, machine readable via its code."""

    code: str
    message: str
    path: str = ""

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"[{self.code}]{where}: {self.message}"


_ABSOLUTE_URL_RE = re.compile(r"^https?://[^\s/]+", re.IGNORECASE)


def _check_iso_date(value: str) -> bool:
    text = value.strip().replace("Z", "+00:00")
    for parser in (date.fromisoformat, datetime.fromisoformat):
        try:
            parser(text)
            return True
        except ValueError:
            continue
    return False


def _validate_article(article: ArticleContent, out: list[Violation]) -> None:
    if not _ABSOLUTE_URL_RE.match(article.url):
        out.append(Violation("article-url-not-absolute", f"url {article.url!r}", "article.url"))
    for i, paragraph in enumerate(article.paragraphs):
        if not normalize_ws(paragraph):
            out.append(Violation("article-paragraph-empty", "blank paragraph", f"article.paragraphs[{i}]"))
    for prefix, refs in (("IMG", article.images), ("VID", article.videos)):
        for n, ref in enumerate(refs, start=1):
            if ref.id != f"{prefix}{n}":
                out.append(
                    Violation(
                        "media-id-not-canonical",
                        f"expected {prefix}{n}, got {ref.id!r}",
                        f"article.{'images' if prefix == 'IMG' else 'videos'}[{n - 1}]",
                    )
                )
    for n, video in enumerate(article.videos):
        if video.duration_s is not None and video.duration_s <= 0:
            out.append(Violation("video-duration-invalid", f"duration {video.duration_s}", f"article.videos[{n}]"))


def _validate_evidence(record: ClaimRecord, out: list[Violation]) -> None:
    evidence = record.evidence
    assert evidence is not None
    article = record.article
    if article is None:
        out.append(Violation("evidence-without-article", "evidence present but article missing", "evidence"))
        return
    if evidence.claim_id != record.id:
        out.append(Violation("evidence-claim-id-mismatch", f"claim_id {evidence.claim_id!r}", "evidence.claim_id"))
    media_ids = article.media_ids()
    normalized_paragraphs = [normalize_ws(p) for p in article.paragraphs]
    for i, item in enumerate(evidence.items):
        path = f"evidence.items[{i}]"
        if not normalize_ws(item.text):
            out.append(Violation("evidence-text-empty", "blank evidence text", path))
        loc = item.locator
        if loc.kind == SourceLocator.PARAGRAPH:
            if loc.paragraph_index >= len(article.paragraphs):
                out.append(
                    Violation(
                        "evidence-locator-unresolved",
                        f"paragraph index {loc.paragraph_index} out of range",
                        path,
                    )
                )
            elif item.is_quote:
                if normalize_ws(item.text) not in normalized_paragraphs[loc.paragraph_index]:
                    out.append(Violation("evidence-quote-not-grounded", "quote not found in paragraph", path))
        else:
            if loc.media_id not in media_ids:
                out.append(Violation("evidence-locator-unresolved", f"unknown media id {loc.media_id!r}", path))
        if item.is_quote and loc.kind != SourceLocator.PARAGRAPH:
            out.append(Violation("evidence-quote-not-grounded", "quotes must anchor to a paragraph", path))
        if item.media_ref is not None and item.media_ref not in media_ids:
            out.append(Violation("evidence-media-ref-unresolved", f"media_ref {item.media_ref!r}", path))
        if (
            item.category is EvidenceCategory.MULTIMEDIA_EVIDENCE
            and media_ids
            and (item.media_ref is None or item.media_ref not in media_ids)
        ):
            out.append(Violation("evidence-media-ref-unresolved", "multimedia item lacks a media_ref", path))


def _validate_justifications(record: ClaimRecord, out: list[Violation]) -> None:
    n_items = len(record.evidence.items) if record.evidence else 0
    has_media = bool(record.article and (record.article.images or record.article.videos))
    for j, justification in enumerate(record.justifications):
        path = f"justifications[{j}]"
        if not normalize_ws(justification.text):
            out.append(Violation("justification-text-empty", "blank justification", path))
        if record.evidence is None:
            out.append(Violation("justification-without-evidence", "no evidence set on record", path))
        for ref in justification.evidence_refs:
            if ref < 0 or ref >= n_items:
                out.append(Violation("justification-ref-out-of-range", f"evidence ref {ref}", path))
        if justification.mode is JustificationMode.MULTIMODAL and has_media and record.evidence is not None:
            visual = False
            for ref in justification.evidence_refs:
                if 0 <= ref < n_items:
                    kind = record.evidence.items[ref].locator.kind
                    if kind in (SourceLocator.IMAGE, SourceLocator.VIDEO_FRAME):
                        visual = True
                        break
            if not visual:
                out.append(
                    Violation(
                        "justification-multimodal-no-visual-ref",
                        "multimodal justification cites no image or video evidence",
                        path,
                    )
                )


def validate_record(record: ClaimRecord) -> list[Violation]:
    """Check every record invariant; returns an empty list when the record is clean."""
    out: list[Violation] = []
    if record.id != record_id(record.review_url, record.claim_text):
        out.append(Violation("id-mismatch", "id is not the canonical hash of (review_url, claim_text)", "id"))
    if record.language not in SUPPORTED_LANGUAGES:
        out.append(Violation("language-not-supported", f"language {record.language!r}", "language"))
    if not normalize_ws(record.claim_text):
        out.append(Violation("claim-text-empty", "blank claim text", "claim_text"))
    if not _ABSOLUTE_URL_RE.match(record.review_url):
        out.append(Violation("review-url-not-absolute", f"url {record.review_url!r}", "review_url"))
    if record.claim_date is not None and not _check_iso_date(record.claim_date):
        out.append(Violation("claim-date-not-iso", f"claim_date {record.claim_date!r}", "claim_date"))
    if record.article is not None:
        _validate_article(record.article, out)
    if record.evidence is not None:
        _validate_evidence(record, out)
    _validate_justifications(record, out)
    for k, evaluation in enumerate(record.evaluations):
        if not 0 <= evaluation.score <= 100:
            out.append(Violation("evaluation-score-out-of-range", f"score {evaluation.score}", f"evaluations[{k}]"))
    return out


# --- JSON (de)serialization -------------------------------------------------
#
# Key order in the emitted JSON follows the dataclass field order above so
# that two writes of the same record are byte identical.


class RecordDecodeError(ValueError):
    pass


def _locator_to_jsonable(loc: SourceLocator) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": loc.kind}
    if loc.kind == SourceLocator.PARAGRAPH:
        out["paragraph_index"] = loc.paragraph_index
        if loc.char_span is not None:
            out["char_span"] = list(loc.char_span)
    else:
        out["media_id"] = loc.media_id
        if loc.kind == SourceLocator.VIDEO_FRAME:
            out["timestamp_s"] = loc.timestamp_s
    return out


def _locator_from_jsonable(data: dict[str, Any]) -> SourceLocator:
    span = data.get("char_span")
    return SourceLocator(
        kind=data["kind"],
        paragraph_index=data.get("paragraph_index"),
        media_id=data.get("media_id"),
        timestamp_s=data.get("timestamp_s"),
        char_span=tuple(span) if span is not None else None,
    )


def to_jsonable(record: ClaimRecord) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": record.id,
        "language": record.language,
        "claim_text": record.claim_text,
        "claimant": record.claimant,
        "claim_date": record.claim_date,
        "publisher": record.publisher,
        "review_url": record.review_url,
        "review_title": record.review_title,
        "original_rating": record.original_rating,
        "verdict": record.verdict.value,
        "content_type": record.content_type.value if record.content_type else None,
        "article": None,
        "evidence": None,
        "justifications": [],
        "evaluations": [],
    }
    if record.article is not None:
        art = record.article
        out["article"] = {
            "url": art.url,
            "paragraphs": list(art.paragraphs),
            "images": [
                {"id": m.id, "src_url": m.src_url, "caption": m.caption, "local_path": m.local_path}
                for m in art.images
            ],
            "videos": [
                {"id": m.id, "src_url": m.src_url, "local_path": m.local_path, "duration_s": m.duration_s}
                for m in art.videos
            ],
            "fetched_at": art.fetched_at,
        }
    if record.evidence is not None:
        ev = record.evidence
        out["evidence"] = {
            "claim_id": ev.claim_id,
            "items": [
                {
                    "category": item.category.value,
                    "text": item.text,
                    "locator": _locator_to_jsonable(item.locator),
                    "is_quote": item.is_quote,
                    "media_ref": item.media_ref,
                }
                for item in ev.items
            ],
            "model_id": ev.model_id,
            "template_version": ev.template_version,
        }
    out["justifications"] = [
        {
            "mode": j.mode.value,
            "text": j.text,
            "evidence_refs": list(j.evidence_refs),
            "model_id": j.model_id,
            "generated_at": j.generated_at,
        }
        for j in record.justifications
    ]
    out["evaluations"] = [
        {
            "task": e.task.value,
            "criterion": e.criterion.value,
            "score": e.score,
            "rationale": e.rationale,
            "judge_model_id": e.judge_model_id,
        }
        for e in record.evaluations
    ]
    return out


def record_from_jsonable(data: dict[str, Any]) -> ClaimRecord:
    try:
        article = None
        if data.get("article") is not None:
            art = data["article"]
            article = ArticleContent(
                url=art["url"],
                paragraphs=tuple(art["paragraphs"]),
                images=tuple(
                    ImageRef(id=m["id"], src_url=m["src_url"], caption=m.get("caption"), local_path=m.get("local_path"))
                    for m in art.get("images", ())
                ),
                videos=tuple(
                    VideoRef(
                        id=m["id"],
                        src_url=m["src_url"],
                        local_path=m.get("local_path"),
                        duration_s=m.get("duration_s"),
                    )
                    for m in art.get("videos", ())
                ),
                fetched_at=art.get("fetched_at"),
            )
        evidence = None
        if data.get("evidence") is not None:
            ev = data["evidence"]
            evidence = EvidenceSet(
                claim_id=ev["claim_id"],
                items=tuple(
                    EvidenceItem(
                        category=EvidenceCategory(item["category"]),
                        text=item["text"],
                        locator=_locator_from_jsonable(item["locator"]),
                        is_quote=item["is_quote"],
                        media_ref=item.get("media_ref"),
                    )
                    for item in ev["items"]
                ),
                model_id=ev["model_id"],
                template_version=ev["template_version"],
            )
        return ClaimRecord(
            id=data["id"],
            language=data["language"],
            claim_text=data["claim_text"],
            claimant=data.get("claimant"),
            claim_date=data.get("claim_date"),
            publisher=data["publisher"],
            review_url=data["review_url"],
            review_title=data["review_title"],
            original_rating=data["original_rating"],
            verdict=VerdictLabel(data["verdict"]),
            content_type=ContentType(data["content_type"]) if data.get("content_type") else None,
            article=article,
            evidence=evidence,
            justifications=tuple(
                Justification(
                    mode=JustificationMode(j["mode"]),
                    text=j["text"],
                    evidence_refs=tuple(j["evidence_refs"]),
                    model_id=j["model_id"],
                    generated_at=j["generated_at"],
                )
                for j in data.get("justifications", ())
            ),
            evaluations=tuple(
                EvaluationScore(
                    task=JudgeTask(e["task"]),
                    criterion=Criterion(e["criterion"]),
                    score=e["score"],
                    rationale=e["rationale"],
                    judge_model_id=e["judge_model_id"],
                )
                for e in data.get("evaluations", ())
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordDecodeError(f"cannot decode record: {exc}") from exc


def dumps_record(record: ClaimRecord) -> str:
    return json.dumps(to_jsonable(record), ensure_ascii=False, separators=(",", ":"))


def loads_record(line: str) -> ClaimRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordDecodeError(f"invalid json: {exc}") from exc
    if not isinstance(data, dict):
        raise RecordDecodeError("record line is not a json object")
    return record_from_jsonable(data)
