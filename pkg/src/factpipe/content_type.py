"""Few-shot classification of the medium a claim spread through."""

from __future__ import annotations

import logging
import re

from .assets import load_prompt
from .gateway import CompletionRequest, Gateway
from .records import ContentType

logger = logging.getLogger(__name__)

CLASS_TOKENS = tuple(ct.value for ct in ContentType)

_TOKEN_RES = {ct: re.compile(rf"\b{ct.value}\b", re.IGNORECASE) for ct in ContentType}

STRICT_SUFFIX = "\nRéponds par un seul mot, sans ponctuation."
STRICT_SUFFIX_DE = "\nAntworte mit genau einem Wort, ohne Satzzeichen."


def build_content_type_prompt(claim_text: str, language: str = "fr") -> tuple[str, str, str]:
    """Returns (system_text, user_text, template_version)."""
    system = load_prompt("categorize_system")
    user = load_prompt(f"categorize_user_{language if language in ('fr', 'de') else 'fr'}")
    return system.text, user.render(claim=claim_text), f"{system.version}/{user.version}"


def parse_content_type(text: str) -> ContentType | None:
    """Token search over the response; None when zero or several match."""
    stripped = text.strip().strip(".!«»\"' ")
    for ct in ContentType:
        if stripped.casefold() == ct.value.casefold():
            return ct
    hits = [ct for ct, rx in _TOKEN_RES.items() if rx.search(text)]
    if len(hits) == 1:
        return hits[0]
    return None


def categorize_content_type(
    claim_text: str, gateway: Gateway, *, language: str = "fr", model_id: str = "mock-1"
) -> tuple[ContentType, bool]:
    """Classify one claim. The bool says whether the Text default kicked in."""
    system_text, user_text, _version = build_content_type_prompt(claim_text, language)
    request = CompletionRequest(
        system_text=system_text, user_text=user_text, temperature=0.2, max_output_tokens=8, model_id=model_id
    )
    result = gateway.complete(request)
    parsed = parse_content_type(result.text)
    if parsed is not None:
        return parsed, False
    suffix = STRICT_SUFFIX_DE if language == "de" else STRICT_SUFFIX
    retry = CompletionRequest(
        system_text=system_text,
        user_text=user_text + suffix,
        temperature=0.2,
        max_output_tokens=8,
        model_id=model_id,
    )
    parsed = parse_content_type(gateway.complete(retry).text)
    if parsed is not None:
        return parsed, False
    logger.warning("content type unparseable twice for claim %.60r; defaulting to Text", claim_text)
    return ContentType.TEXT, True
