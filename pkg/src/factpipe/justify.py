"""Verdict justification generation, text-only and multimodal."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone

from .gateway import CompletionRequest, Gateway, MediaAttachment
from .records import (
    EvidenceCategory,
    EvidenceSet,
    Justification,
    JustificationMode,
    SourceLocator,
    VerdictLabel,
    normalize_ws,
)
from .assets import load_prompt

logger = logging.getLogger(__name__)

GENERATION_TEMPERATURE = 0.2

TIMESTAMP_PATTERN = re.compile(r"\b\d{1,2}:\d{2}\b|\b\d+(?:\.\d+)?\s*s(?:ec(?:onds?)?|ekunden?)?\b", re.IGNORECASE)

FLAG_NO_TIMESTAMP_CITED = "timestamp-citation-missing"
FLAG_UNKNOWN_HANDLE = "unknown-handle-cited"

_SECTION_RE = re.compile(r"^\s*Justification\s*:\s*", re.MULTILINE)
_HANDLE_RE = re.compile(r"\[E(\d+)\]")


class EmptyEvidence(ValueError):
    pass


class ModeMediaMismatch(ValueError):
    """Multimodal asked for, but neither article media nor multimedia evidence exist."""


class MissingSection(Exception):
    """Response lacked the required Justification: section twice in a row."""


MULTIMODAL_BLOCK = (
    "Video frames and images from the article are attached; their captions\n"
    "and timestamps are given next to each attachment. When a frame backs a\n"
    "point, cite its timestamp (mm:ss or seconds) next to the evidence handle."
)


@dataclass(frozen=True)
class JustificationPrompt:
    system_text: str
    user_text: str
    template_version: str
    mode: JustificationMode
    attachments: tuple[MediaAttachment, ...]


def render_evidence_block(evidence: EvidenceSet) -> str:
    """Handles [E1]..[En] in item order, grouped under category headers."""
    lines: list[str] = []
    grouped: dict[EvidenceCategory, list[tuple[int, object]]] = {}
    for index, item in enumerate(evidence.items):
        grouped.setdefault(item.category, []).append((index, item))
    for cat in EvidenceCategory:
        entries = grouped.get(cat)
        if not entries:
            continue
        lines.append(f"{cat.value}:")
        for index, item in entries:
            handle = index + 1
            loc = item.locator
            if loc.kind == SourceLocator.PARAGRAPH:
                where = f"P{loc.paragraph_index + 1}"
            elif loc.kind == SourceLocator.VIDEO_FRAME:
                where = f"{loc.media_id}@{loc.timestamp_s:g}"
            else:
                where = loc.media_id
            quoted = f'"{item.text}"' if item.is_quote else item.text
            lines.append(f"  [E{handle}] ({where}) {quoted}")
    return "\n".join(lines)


def build_justification_prompt(
    claim_text: str,
    verdict: VerdictLabel,
    evidence: EvidenceSet,
    mode: JustificationMode,
    *,
    attachments: tuple[MediaAttachment, ...] = (),
    record_has_media: bool = False,
    allow_empty_evidence: bool = False,
) -> JustificationPrompt:
    if not evidence.items and not allow_empty_evidence:
        raise EmptyEvidence("refusing to justify from an empty evidence set")
    has_multimedia_items = any(i.category is EvidenceCategory.MULTIMEDIA_EVIDENCE for i in evidence.items)
    if mode is JustificationMode.MULTIMODAL and not record_has_media and not has_multimedia_items:
        raise ModeMediaMismatch("multimodal mode needs article media or multimedia evidence")
    system = load_prompt("justify_system")
    user = load_prompt("justify_user")
    evidence_block = render_evidence_block(evidence) if evidence.items else "(no evidence items)"
    mode_block = MULTIMODAL_BLOCK if mode is JustificationMode.MULTIMODAL else ""
    rendered = user.render(
        claim=normalize_ws(claim_text),
        verdict=verdict.value,
        evidence_block=evidence_block,
        mode_block=mode_block,
    )
    if mode is not JustificationMode.MULTIMODAL:
        attachments = ()
    # every attachment must stay identifiable in the prompt: fall back to the
    # mime type as caption when neither caption nor timestamp is present
    fixed = tuple(
        a if (a.caption or a.timestamp_s is not None)
        else MediaAttachment(a.mime_type, data=a.data, path=a.path, caption=a.mime_type, timestamp_s=None)
        for a in attachments
    )
    return JustificationPrompt(
        system_text=system.text,
        user_text=rendered,
        template_version=f"{system.version}/{user.version}",
        mode=mode,
        attachments=fixed,
    )


def parse_justification_text(text: str) -> str | None:
    """Extract the single required section; None when it is absent."""
    m = _SECTION_RE.search(text)
    if not m:
        return None
    section = text[m.start():].strip()
    return section if section else None


def strip_multimedia(evidence: EvidenceSet) -> EvidenceSet:
    """Ablation helper: the same set minus every MultimediaEvidence item."""
    kept = tuple(i for i in evidence.items if i.category is not EvidenceCategory.MULTIMEDIA_EVIDENCE)
    return EvidenceSet(
        claim_id=evidence.claim_id,
        items=kept,
        model_id=evidence.model_id,
        template_version=evidence.template_version,
    )


def generate_justification(
    claim_text: str,
    verdict: VerdictLabel,
    evidence: EvidenceSet,
    mode: JustificationMode,
    gateway: Gateway,
    *,
    attachments: tuple[MediaAttachment, ...] = (),
    record_has_media: bool = False,
    allow_empty_evidence: bool = False,
    model_id: str = "mock-1",
) -> tuple[Justification, tuple[str, ...]]:
    """Generate one justification; returns it with quality flags.

    Flags never reject the output: timestamp-citation-missing marks a
    multimodal answer that cites no frame timestamp, unknown-handle-cited
    marks citations of handles outside the evidence list (those refs drop).
    """
    prompt = build_justification_prompt(
        claim_text,
        verdict,
        evidence,
        mode,
        attachments=attachments,
        record_has_media=record_has_media,
        allow_empty_evidence=allow_empty_evidence,
    )
    request = CompletionRequest(
        system_text=prompt.system_text,
        user_text=prompt.user_text,
        media=prompt.attachments,
        temperature=GENERATION_TEMPERATURE,
        model_id=model_id,
    )
    result = gateway.complete(request)
    section = parse_justification_text(result.text)
    if section is None:
        retry = CompletionRequest(
            system_text=prompt.system_text,
            user_text=prompt.user_text
            + "\n\nYour previous answer lacked the required section. Start your answer with the line Justification:",
            media=prompt.attachments,
            temperature=GENERATION_TEMPERATURE,
            model_id=model_id,
        )
        result = gateway.complete(retry)
        section = parse_justification_text(result.text)
        if section is None:
            raise MissingSection("model never produced a Justification: section")

    flags: list[str] = []
    refs: list[int] = []
    for handle in _HANDLE_RE.findall(section):
        index = int(handle) - 1
        if 0 <= index < len(evidence.items):
            if index not in refs:
                refs.append(index)
        elif FLAG_UNKNOWN_HANDLE not in flags:
            flags.append(FLAG_UNKNOWN_HANDLE)
    if (
        mode is JustificationMode.MULTIMODAL
        and any(a.timestamp_s is not None for a in prompt.attachments)
        and not TIMESTAMP_PATTERN.search(section)
    ):
        flags.append(FLAG_NO_TIMESTAMP_CITED)

    justification = Justification(
        mode=mode,
        text=section,
        evidence_refs=tuple(refs),
        model_id=result.model_id,
        generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    return justification, tuple(flags)
