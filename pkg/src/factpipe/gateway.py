"""Provider-agnostic access to chat completion models.

The gateway owns retries, concurrency limits, the audit trail and the
record/replay cassette store. Providers only turn one CompletionRequest
into one CompletionResult. The MockProvider is fully deterministic and
understands the [TASK:...] markers the prompt templates put into their
system text, so offline runs exercise every downstream parser.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

from .net import AuthError, RateLimited, RetryPolicy, Timeout, TransportError, call_with_backoff
from .records import EvidenceCategory

logger = logging.getLogger(__name__)


class ProviderRefusal(Exception):
    """The provider answered with nothing usable."""


class MediaUnsupported(Exception):
    pass


class UnknownMode(Exception):
    """Mock got a prompt without a recognizable task marker."""


class CassetteMiss(Exception):
    pass


@dataclass(frozen=True)
class MediaAttachment:
    mime_type: str
    data: bytes | None = None
    path: str | None = None
    caption: str | None = None
    timestamp_s: float | None = None

    def __post_init__(self) -> None:
        if (self.data is None) == (self.path is None):
            raise ValueError("attachment needs exactly one of data or path")

    def payload(self) -> bytes:
        if self.data is not None:
            return self.data
        return Path(self.path).read_bytes()


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str
    user_text: str
    media: tuple[MediaAttachment, ...] = ()
    temperature: float = 0.2
    max_output_tokens: int = 1024
    model_id: str = "mock-1"

    def __post_init__(self) -> None:
        if not self.user_text.strip():
            raise ValueError("user_text must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class Usage:
    input_tokens: int
    output_tokens: int


@dataclass(frozen=True)
class CompletionResult:
    text: str
    model_id: str
    usage: Usage
    latency_ms: float


class Provider(Protocol):
    model_id: str
    supports_media: bool

    def complete(self, request: CompletionRequest) -> CompletionResult: ...


def request_digest(request: CompletionRequest) -> str:
    """Stable key for caching: hashes text fields and media payloads."""
    media_parts = []
    for attachment in request.media:
        media_parts.append(
            {
                "mime_type": attachment.mime_type,
                "sha256": hashlib.sha256(attachment.payload()).hexdigest(),
                "caption": attachment.caption,
                "timestamp_s": attachment.timestamp_s,
            }
        )
    canonical = json.dumps(
        {
            "system_text": request.system_text,
            "user_text": request.user_text,
            "media": media_parts,
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
            "model_id": request.model_id,
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- deterministic mock -------------------------------------------------------

_TASK_MARKER_RE = re.compile(r"\[TASK:(EVIDENCE|JUSTIFY|JUDGE|CATEGORIZE)\]")
_PARAGRAPH_TAG_RE = re.compile(r"^\[P(\d+)\]\s+(.*\S)\s*$", re.MULTILINE)
_IMG_TAG_RE = re.compile(r"^\[IMG(\d+)\]", re.MULTILINE)
_VID_TAG_RE = re.compile(r"^\[VID(\d+)\]", re.MULTILINE)

# keyword cues per category, matched casefolded; first category wins
_CATEGORY_CUES: dict[EvidenceCategory, tuple[str, ...]] = {
    EvidenceCategory.EXPERT_TESTIMONY: (
        "professeur", "épidémiologiste", "virologue", "chercheur", "chercheuse",
        "spécialiste", "selon le docteur", "selon la docteure", "immunologiste",
        "professor", "forscher", "wissenschaftler", "virologe", "epidemiologe",
        "laut dr.", "expertin", "experte", "immunologe",
    ),
    EvidenceCategory.QUANTITATIVE_DATA: (
        "%", "pour cent", "prozent", "millions", "milliards", "millionen",
        "milliarden", "selon les chiffres", "laut statistik", "statistiques",
        "sondage", "umfrage",
    ),
    EvidenceCategory.OFFICIAL_RECORDS: (
        "ministère", "décret", "journal officiel", "tribunal", "préfecture",
        "arrêté", "loi ", "gesetz", "verordnung", "ministerium", "gericht",
        "bundesamt", "behörde", "amtsblatt",
    ),
    EvidenceCategory.MEDIA_RECORD: (
        "partagé sur", "partagée sur", "publié sur", "publiée sur", "facebook",
        "twitter", "telegram", "tiktok", "whatsapp", "relayé", "relayée",
        "capture d'écran", "geteilt", "verbreitet", "screenshot", "beitrag",
    ),
    EvidenceCategory.MULTIMEDIA_EVIDENCE: (
        "la vidéo", "cette vidéo", "la séquence", "l'image", "la photo",
        "les images", "métadonnées", "montage", "das video", "die aufnahme",
        "das foto", "die bilder", "im video", "metadaten",
    ),
    EvidenceCategory.EYEWITNESS_ACCOUNT: (
        "témoin", "témoigne", "raconte", "j'ai vu", "sur place", "habitant",
        "augenzeuge", "augenzeugin", "ich habe gesehen", "vor ort",
        "schildert", "berichtet von",
    ),
}

_CATEGORIZE_CLAIM_RE = re.compile(
    r"^(?:Affirmation|Behauptung|Claim)\s*:\s*[«„\"]?\s*(.+?)\s*[»“\"]?\s*$", re.MULTILINE
)
_CONTENT_CUES: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("video", ("vidéo", "video", "séquence", "filmé", "filmée", "aufnahme")),
    ("image", ("photo", "image", "foto", "bild", "cliché")),
    ("statistic", ("%", "pour cent", "prozent", "taux", "statistique", "chiffres", "zahlen", "rate ")),
)

_JUDGE_WEIGHT_RE = re.compile(r"^- \(weight (\d+(?:\.\d+)?)\) (.+)$", re.MULTILINE)
_JUDGE_DEDUCT_RE = re.compile(r"^- \(deduct (\d+(?:\.\d+)?)\) (.+)$", re.MULTILINE)
_HANDLE_RE = re.compile(r"\[E(\d+)\]")
_VISUAL_HANDLE_RE = re.compile(r"\[E(\d+)\]\s+\((?:IMG|VID)")
_VERDICT_LINE_RE = re.compile(r"^Verdict reached by the fact-checkers:\s*(.+)$", re.MULTILINE)


def _mock_evidence(request: CompletionRequest) -> str:
    paragraphs = [(int(n), text) for n, text in _PARAGRAPH_TAG_RE.findall(request.user_text)]
    img_ids = sorted({int(n) for n in _IMG_TAG_RE.findall(request.user_text)})
    vid_ids = sorted({int(n) for n in _VID_TAG_RE.findall(request.user_text)})
    picked: dict[EvidenceCategory, list[str]] = {cat: [] for cat in EvidenceCategory}
    seen_texts: set[str] = set()
    for n, text in paragraphs:
        folded = text.casefold()
        if folded in seen_texts:
            continue
        for cat, cues in _CATEGORY_CUES.items():
            if any(cue in folded for cue in cues):
                picked[cat].append(f'- ([P{n}]) "{text}"')
                seen_texts.add(folded)
                break
    for vid in vid_ids:
        picked[EvidenceCategory.MULTIMEDIA_EVIDENCE].append(
            f"- ([VID{vid}]@0.0) the opening of the footage the article examines as VID{vid}"
        )
    for img in img_ids:
        picked[EvidenceCategory.MULTIMEDIA_EVIDENCE].append(
            f"- ([IMG{img}]) the photograph the article examines as IMG{img}"
        )
    lines: list[str] = []
    for cat in EvidenceCategory:
        lines.append(f"{cat.value}:")
        if picked[cat]:
            lines.extend(picked[cat])
        else:
            lines.append("none")
    return "\n".join(lines)


def _mock_justification(request: CompletionRequest) -> str:
    handles = sorted({int(n) for n in _HANDLE_RE.findall(request.user_text)})
    verdict_match = _VERDICT_LINE_RE.search(request.user_text)
    verdict = verdict_match.group(1).strip() if verdict_match else "the recorded verdict"
    if not handles:
        return "Justification: No evidence was supplied, so the verdict stands on the reviewers' own account."
    first = f"[E{handles[0]}]"
    second = f"[E{handles[-1]}]" if len(handles) > 1 else first
    sentences = [
        f"Justification: The verdict {verdict} follows directly from {first}.",
        f"The remaining items, in particular {second}, corroborate the same reading rather than cutting against it.",
    ]
    visual_handles = sorted({int(n) for n in _VISUAL_HANDLE_RE.findall(request.user_text)})
    if visual_handles:
        sentences.append(f"The visual record in [E{visual_handles[0]}] shows the same scene first-hand.")
    timestamps = [a.timestamp_s for a in request.media if a.timestamp_s is not None]
    if timestamps:
        ts = timestamps[0]
        minutes, seconds = divmod(int(ts), 60)
        sentences.append(
            f"The attached frame at {minutes:02d}:{seconds:02d} matches the scene that {first} describes."
        )
    elif request.media:
        sentences.append(f"The attached image supports the account given in {first}.")
    return " ".join(sentences)


def _mock_judge(request: CompletionRequest) -> str:
    weights = [(desc, float(w)) for w, desc in _JUDGE_WEIGHT_RE.findall(request.user_text)]
    deductions = [(desc, float(d)) for d, desc in _JUDGE_DEDUCT_RE.findall(request.user_text)]
    digest = hashlib.sha256((request.system_text + request.user_text).encode("utf-8")).digest()
    lines = []
    total = 0.0
    for i, (desc, weight) in enumerate(weights):
        if digest[i % len(digest)] % 4 != 0:
            lines.append(f"Awarded: {desc} (+{weight:g})")
            total += weight
    for j, (desc, deduction) in enumerate(deductions):
        if digest[(j + 16) % len(digest)] % 5 == 0:
            lines.append(f"Penalty: {desc} (-{deduction:g})")
            total -= deduction
    score = max(0, round(total))
    lines.append(f"Score: {score}")
    lines.append(
        "Rationale: Scored by checklist; awarded items were satisfied by the output and penalties reflect observed defects."
    )
    return "\n".join(lines)


def _mock_categorize(request: CompletionRequest) -> str:
    claims = _CATEGORIZE_CLAIM_RE.findall(request.user_text)
    claim = claims[-1].casefold() if claims else request.user_text.casefold()
    for token, cues in _CONTENT_CUES:
        if any(cue in claim for cue in cues):
            return token
    return "text"


class MockProvider:
    """Offline provider: deterministic, grammar-correct answers per task."""

    def __init__(self, model_id: str = "mock-1", supports_media: bool = True):
        self.model_id = model_id
        self.supports_media = supports_media
        self.calls = 0

    def complete(self, request: CompletionRequest) -> CompletionResult:
        self.calls += 1
        marker = _TASK_MARKER_RE.search(request.system_text)
        if marker is None:
            raise UnknownMode("system text carries no [TASK:...] marker")
        task = marker.group(1)
        if task == "EVIDENCE":
            text = _mock_evidence(request)
        elif task == "JUSTIFY":
            text = _mock_justification(request)
        elif task == "JUDGE":
            text = _mock_judge(request)
        else:
            text = _mock_categorize(request)
        usage = Usage(
            input_tokens=len(request.system_text.split()) + len(request.user_text.split()),
            output_tokens=len(text.split()),
        )
        return CompletionResult(text=text, model_id=self.model_id, usage=usage, latency_ms=0.0)


class RemoteProvider:
    """Generic JSON chat-completions client.

    Wire format: POST {base_url} with model, temperature, max_tokens and a
    messages array; media parts ride along base64-encoded. Captions and
    timestamps are also written into the user text next to a numbered
    attachment marker so text-first models keep the pairing.
    """

    def __init__(
        self,
        base_url: str,
        model_id: str,
        *,
        api_key: str | None = None,
        supports_media: bool = True,
        timeout_s: float = 120.0,
        session=None,
    ):
        self.base_url = base_url
        self.model_id = model_id
        self.api_key = api_key
        self.supports_media = supports_media
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def _marker_for(self, index: int, attachment: MediaAttachment) -> str:
        bits = [f"[ATTACHMENT {index}: {attachment.mime_type}"]
        if attachment.timestamp_s is not None:
            bits.append(f" at {attachment.timestamp_s:g}s")
        if attachment.caption:
            bits.append(f" - {attachment.caption}")
        return "".join(bits) + "]"

    def complete(self, request: CompletionRequest) -> CompletionResult:
        user_text = request.user_text
        parts: list[dict] = []
        if request.media:
            markers = [self._marker_for(i + 1, a) for i, a in enumerate(request.media)]
            user_text = user_text + "\n\n" + "\n".join(markers)
        parts.append({"type": "text", "text": user_text})
        for attachment in request.media:
            parts.append(
                {
                    "type": "media",
                    "mime_type": attachment.mime_type,
                    "data": base64.b64encode(attachment.payload()).decode("ascii"),
                }
            )
        payload = {
            "model": request.model_id if request.model_id != "mock-1" else self.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": parts},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()
        try:
            resp = self._session.post(self.base_url, json=payload, headers=headers, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise Timeout(f"timeout calling {self.base_url}") from exc
        except requests.RequestException as exc:
            raise TransportError(f"error calling {self.base_url}: {exc}") from exc
        latency_ms = (time.monotonic() - started) * 1000.0
        if resp.status_code in (401, 403):
            raise AuthError(f"model endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code == 429:
            retry_after = resp.headers.get("Retry-After")
            raise RateLimited("model endpoint rate limit", retry_after_s=float(retry_after) if retry_after else None)
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code} from model endpoint: {resp.text[:200]}")
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
            usage_raw = data.get("usage", {})
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unparseable model response: {exc}") from exc
        if not isinstance(text, str) or not text.strip():
            raise ProviderRefusal("model returned an empty completion")
        return CompletionResult(
            text=text,
            model_id=str(data.get("model", self.model_id)),
            usage=Usage(
                input_tokens=int(usage_raw.get("prompt_tokens", 0)),
                output_tokens=int(usage_raw.get("completion_tokens", 0)),
            ),
            latency_ms=latency_ms,
        )


# --- cassettes and the gateway -------------------------------------------------


class CassetteStore:
    """One file per request hash; response text plus enough context to debug."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def load(self, digest: str) -> str | None:
        path = self.path_for(digest)
        if not path.is_file():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return data["response_text"]

    def save(self, digest: str, request: CompletionRequest, result: CompletionResult) -> None:
        payload = {
            "request_hash": digest,
            "model_id": result.model_id,
            "system_text": request.system_text,
            "user_text": request.user_text,
            "n_media": len(request.media),
            "response_text": result.text,
        }
        self.path_for(digest).write_text(
            json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8"
        )


@dataclass
class GatewayStats:
    calls: int = 0
    cassette_hits: int = 0
    failures: int = 0


class Gateway:
    """Front door for all model traffic.

    mode "live" talks to the provider, "record" additionally writes
    cassettes, "replay" serves cassettes only and raises CassetteMiss on a
    gap. Every call lands in the audit log when one is configured.
    """

    def __init__(
        self,
        provider: Provider | None,
        *,
        mode: str = "live",
        cassettes: CassetteStore | None = None,
        max_in_flight: int = 4,
        retry_policy: RetryPolicy = RetryPolicy(),
        audit_path: str | Path | None = None,
        run_id: str = "",
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown gateway mode {mode!r}")
        if mode in ("record", "replay") and cassettes is None:
            raise ValueError(f"mode {mode!r} needs a cassette store")
        if mode != "replay" and provider is None:
            raise ValueError(f"mode {mode!r} needs a provider")
        self.provider = provider
        self.mode = mode
        self.cassettes = cassettes
        self.retry_policy = retry_policy
        self.audit_path = Path(audit_path) if audit_path else None
        self.run_id = run_id
        self.stats = GatewayStats()
        self._sleep = sleep
        self._semaphore = threading.Semaphore(max_in_flight)
        self._audit_lock = threading.Lock()

    def _audit(self, digest: str, request: CompletionRequest, outcome: str, latency_ms: float, chars: int) -> None:
        if self.audit_path is None:
            return
        entry = {
            "run_id": self.run_id,
            "request_hash": digest,
            "model_id": request.model_id if self.provider is None else self.provider.model_id,
            "mode": self.mode,
            "outcome": outcome,
            "latency_ms": round(latency_ms, 3),
            "response_chars": chars,
        }
        line = json.dumps(entry, ensure_ascii=False, separators=(",", ":"))
        with self._audit_lock:
            with self.audit_path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def complete(self, request: CompletionRequest) -> CompletionResult:
        digest = request_digest(request)
        self.stats.calls += 1
        if self.mode == "replay":
            text = self.cassettes.load(digest)
            if text is None:
                self.stats.failures += 1
                self._audit(digest, request, "cassette-miss", 0.0, 0)
                raise CassetteMiss(f"no cassette for request {digest[:12]}")
            self.stats.cassette_hits += 1
            self._audit(digest, request, "replayed", 0.0, len(text))
            return CompletionResult(text=text, model_id="cassette", usage=Usage(0, 0), latency_ms=0.0)

        if request.media and not self.provider.supports_media:
            self._audit(digest, request, "media-unsupported", 0.0, 0)
            raise MediaUnsupported(f"provider {self.provider.model_id} is text-only")

        started = time.monotonic()
        try:
            with self._semaphore:
                result = call_with_backoff(
                    lambda: self.provider.complete(request),
                    policy=self.retry_policy,
                    sleep=self._sleep,
                    what=f"completion ({self.provider.model_id})",
                )
        except Exception as exc:
            self.stats.failures += 1
            self._audit(digest, request, f"error:{type(exc).__name__}", (time.monotonic() - started) * 1000.0, 0)
            raise
        if not result.text.strip():
            self.stats.failures += 1
            self._audit(digest, request, "refusal", result.latency_ms, 0)
            raise ProviderRefusal("provider returned an empty completion")
        if self.mode == "record":
            self.cassettes.save(digest, request, result)
        self._audit(digest, request, "ok", result.latency_ms or (time.monotonic() - started) * 1000.0, len(result.text))
        return result
