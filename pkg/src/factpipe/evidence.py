"""Category-typed evidence extraction with grounding enforcement.

Responses follow a line grammar: six category headers in canonical order,
each followed by item lines of the shape

    - ([P3]) "verbatim passage"
    - ([IMG1]) paraphrased description
    - ([VID2]@12.0) paraphrased description

or the word none. The parser drops and flags anything that breaks the
grammar or the grounding rules; extraction re-prompts once with the
violations quoted back before giving up on the offending items.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .assets import load_category_definitions, load_prompt
from .gateway import CompletionRequest, Gateway
from .records import (
    ArticleContent,
    ClaimRecord,
    EvidenceCategory,
    EvidenceItem,
    EvidenceSet,
    SourceLocator,
    Violation,
    normalize_ws,
)

logger = logging.getLogger(__name__)

# violation codes for model output (distinct from record-level codes)
BAD_LOCATOR = "BadLocator"
UNQUOTED_HALLUCINATION = "UnquotedHallucination"
CROSS_CATEGORY_DUPLICATE = "CrossCategoryDuplicate"
UNKNOWN_CATEGORY = "UnknownCategory"
GRAMMAR_ERROR = "GrammarError"

EXTRACTION_TEMPERATURE = 0.2
PARAPHRASE_CONTENT_WORD_RATIO = 0.4


class EmptyArticle(ValueError):
    pass


class AllItemsInvalid(Exception):
    """The model produced items but none survived validation."""


@dataclass(frozen=True)
class EvidencePrompt:
    system_text: str
    user_text: str
    template_version: str


@dataclass(frozen=True)
class ExtractionOutcome:
    evidence: EvidenceSet
    violations: tuple[Violation, ...]
    retried: bool


def render_article_block(article: ArticleContent) -> str:
    """Tagged article rendering shared by the extraction and judge prompts."""
    lines = [f"[P{i + 1}] {normalize_ws(p)}" for i, p in enumerate(article.paragraphs)]
    for image in article.images:
        caption = f'caption: "{image.caption}"' if image.caption else "no caption"
        lines.append(f"[{image.id}] image - {caption}")
    for video in article.videos:
        duration = f"duration: {video.duration_s:g}s" if video.duration_s else "duration unknown"
        lines.append(f"[{video.id}] video - {duration}")
    return "\n".join(lines)


def build_evidence_prompt(claim_text: str, article: ArticleContent, *, language: str = "fr") -> EvidencePrompt:
    if not article.paragraphs:
        raise EmptyArticle(f"article {article.url} has no paragraphs")
    system = load_prompt("evidence_system")
    user = load_prompt("evidence_user")
    definitions = load_category_definitions(language)
    rendered = user.render(
        claim=normalize_ws(claim_text),
        article_block=render_article_block(article),
        category_definitions=definitions.as_block(),
    )
    version = f"{system.version}/{user.version}/{definitions.version}"
    return EvidencePrompt(system_text=system.text, user_text=rendered, template_version=version)


_HEADER_RE = re.compile(r"^([A-Za-z][A-Za-z ]*?):\s*$")
_ITEM_RE = re.compile(r"^-\s+\((\[[^)\]]+\](?:@[0-9.]+)?)\)\s+(.*\S)\s*$")
_PARA_LOC_RE = re.compile(r"^\[P(\d+)\]$")
_IMG_LOC_RE = re.compile(r"^\[IMG(\d+)\]$")
_VID_LOC_RE = re.compile(r"^\[VID(\d+)\]@([0-9]+(?:\.[0-9]+)?)$")

_CATEGORY_BY_NAME = {cat.value: cat for cat in EvidenceCategory}

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def _content_words(text: str) -> set[str]:
    return {w for w in _WORD_RE.findall(text.casefold()) if len(w) >= 3}


def _parse_locator(token: str, article: ArticleContent) -> tuple[SourceLocator | None, str | None]:
    """Returns (locator, error). GrammarError-level failures return (None, msg)."""
    m = _PARA_LOC_RE.match(token)
    if m:
        index = int(m.group(1)) - 1
        if index < 0 or index >= len(article.paragraphs):
            return None, f"paragraph tag {token} out of range"
        return SourceLocator(kind=SourceLocator.PARAGRAPH, paragraph_index=index), None
    m = _IMG_LOC_RE.match(token)
    if m:
        media_id = f"IMG{m.group(1)}"
        if media_id not in {i.id for i in article.images}:
            return None, f"unknown image tag {token}"
        return SourceLocator(kind=SourceLocator.IMAGE, media_id=media_id), None
    m = _VID_LOC_RE.match(token)
    if m:
        media_id = f"VID{m.group(1)}"
        video = next((v for v in article.videos if v.id == media_id), None)
        if video is None:
            return None, f"unknown video tag {token}"
        timestamp = float(m.group(2))
        if video.duration_s is not None and timestamp >= video.duration_s:
            return None, f"timestamp {timestamp:g}s beyond video duration {video.duration_s:g}s"
        return SourceLocator(kind=SourceLocator.VIDEO_FRAME, media_id=media_id, timestamp_s=timestamp), None
    return None, None  # not even shaped like a locator


def parse_evidence_response(
    text: str,
    article: ArticleContent,
    *,
    claim_id: str = "",
    model_id: str = "",
    template_version: str = "",
    containment_threshold: float = 1.0,
) -> tuple[EvidenceSet, list[Violation]]:
    """Parse one model response into an EvidenceSet plus violations.

    Offending items are dropped, never repaired; the caller decides whether
    to re-prompt. containment_threshold below 1.0 additionally treats high
    content-word overlap as duplication; at the default only substring
    containment counts.
    """
    items: list[EvidenceItem] = []
    violations: list[Violation] = []
    accepted_texts: list[str] = []
    current: EvidenceCategory | None = None
    skipping_unknown = False
    has_media = bool(article.images or article.videos)
    normalized_paragraphs = [normalize_ws(p) for p in article.paragraphs]

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        header = _HEADER_RE.match(line)
        if header:
            name = header.group(1).strip()
            if name in _CATEGORY_BY_NAME:
                current = _CATEGORY_BY_NAME[name]
                skipping_unknown = False
            else:
                violations.append(Violation(UNKNOWN_CATEGORY, f"unknown category header {name!r}", f"line {lineno}"))
                current = None
                skipping_unknown = True
            continue
        if line.casefold() == "none":
            continue
        item_match = _ITEM_RE.match(line)
        if not item_match:
            violations.append(Violation(GRAMMAR_ERROR, f"unparseable line {line!r}", f"line {lineno}"))
            continue
        if skipping_unknown:
            # items under an unknown header are covered by that violation
            continue
        if current is None:
            violations.append(Violation(GRAMMAR_ERROR, "item line before any category header", f"line {lineno}"))
            continue
        locator_token, body = item_match.group(1), item_match.group(2).strip()
        locator, loc_error = _parse_locator(locator_token, article)
        if locator is None:
            if loc_error is None:
                violations.append(Violation(GRAMMAR_ERROR, f"malformed locator {locator_token!r}", f"line {lineno}"))
            else:
                violations.append(Violation(BAD_LOCATOR, loc_error, f"line {lineno}"))
            continue

        is_quote = len(body) >= 2 and body.startswith('"') and body.endswith('"')
        item_text = body[1:-1].strip() if is_quote else body
        if not item_text:
            violations.append(Violation(GRAMMAR_ERROR, "empty item text", f"line {lineno}"))
            continue
        if is_quote and locator.kind != SourceLocator.PARAGRAPH:
            violations.append(
                Violation(GRAMMAR_ERROR, "quoted items must cite a paragraph tag", f"line {lineno}")
            )
            continue

        if locator.kind == SourceLocator.PARAGRAPH:
            paragraph = normalized_paragraphs[locator.paragraph_index]
            if is_quote:
                if normalize_ws(item_text) not in paragraph:
                    violations.append(
                        Violation(
                            UNQUOTED_HALLUCINATION,
                            f"quote not contained in [P{locator.paragraph_index + 1}]",
                            f"line {lineno}",
                        )
                    )
                    continue
            else:
                words = _content_words(item_text)
                if words:
                    overlap = len(words & _content_words(paragraph)) / len(words)
                    if overlap < PARAPHRASE_CONTENT_WORD_RATIO:
                        violations.append(
                            Violation(
                                UNQUOTED_HALLUCINATION,
                                f"paraphrase shares only {overlap:.0%} of content words with "
                                f"[P{locator.paragraph_index + 1}]",
                                f"line {lineno}",
                            )
                        )
                        continue

        if current is EvidenceCategory.MULTIMEDIA_EVIDENCE and has_media and locator.kind == SourceLocator.PARAGRAPH:
            violations.append(
                Violation(
                    BAD_LOCATOR,
                    "multimedia items must cite an image or video tag when the article has media",
                    f"line {lineno}",
                )
            )
            continue

        folded = normalize_ws(item_text).casefold()
        duplicate = False
        for earlier in accepted_texts:
            if folded in earlier or earlier in folded:
                duplicate = True
            elif containment_threshold < 1.0:
                words = _content_words(folded)
                if words:
                    overlap = len(words & _content_words(earlier)) / len(words)
                    duplicate = overlap >= containment_threshold
            if duplicate:
                break
        if duplicate:
            violations.append(
                Violation(CROSS_CATEGORY_DUPLICATE, f"item duplicates earlier evidence: {item_text[:60]!r}", f"line {lineno}")
            )
            continue

        media_ref = locator.media_id if locator.kind in (SourceLocator.IMAGE, SourceLocator.VIDEO_FRAME) else None
        items.append(
            EvidenceItem(category=current, text=item_text, locator=locator, is_quote=is_quote, media_ref=media_ref)
        )
        accepted_texts.append(folded)

    evidence = EvidenceSet(
        claim_id=claim_id, items=tuple(items), model_id=model_id, template_version=template_version
    )
    return evidence, violations


def _corrective_user_text(original: str, violations: list[Violation]) -> str:
    listed = "\n".join(f"- {v}" for v in violations)
    return (
        original
        + "\n\nYour previous answer broke these rules:\n"
        + listed
        + "\nAnswer again in the same format and fix every problem listed."
    )


def extract_evidence(
    claim: ClaimRecord,
    article: ArticleContent,
    gateway: Gateway,
    *,
    language: str = "fr",
    model_id: str = "mock-1",
    max_corrections: int = 1,
) -> ExtractionOutcome:
    """Prompt, parse, and at most one corrective round; invalid items drop."""
    prompt = build_evidence_prompt(claim.claim_text, article, language=language)
    request = CompletionRequest(
        system_text=prompt.system_text,
        user_text=prompt.user_text,
        temperature=EXTRACTION_TEMPERATURE,
        model_id=model_id,
    )
    result = gateway.complete(request)
    evidence, violations = parse_evidence_response(
        result.text,
        article,
        claim_id=claim.id,
        model_id=result.model_id,
        template_version=prompt.template_version,
    )
    retried = False
    had_items = bool(evidence.items) or bool(violations)
    if violations and max_corrections > 0:
        retried = True
        retry_request = CompletionRequest(
            system_text=prompt.system_text,
            user_text=_corrective_user_text(prompt.user_text, violations),
            temperature=EXTRACTION_TEMPERATURE,
            model_id=model_id,
        )
        retry_result = gateway.complete(retry_request)
        evidence, violations = parse_evidence_response(
            retry_result.text,
            article,
            claim_id=claim.id,
            model_id=retry_result.model_id,
            template_version=prompt.template_version,
        )
    if had_items and not evidence.items and violations:
        raise AllItemsInvalid(f"no evidence item survived validation for claim {claim.id[:12]}")
    if violations:
        logger.info("claim %.12s: %d evidence violations persisted after retry", claim.id, len(violations))
    return ExtractionOutcome(evidence=evidence, violations=tuple(violations), retried=retried)
