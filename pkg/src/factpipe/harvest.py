"""Claim harvesting from a ClaimReview-style fact-check API.

The API shape is the usual one: a claims array where each claim carries one
or more claimReview entries, plus a nextPageToken for cursoring. Transports
are pluggable so tests and offline runs read recorded pages from disk.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol

import requests

from .net import AuthError, RateLimited, RetryPolicy, Timeout, TransportError, call_with_backoff
from .records import SUPPORTED_LANGUAGES

logger = logging.getLogger(__name__)


class SchemaError(ValueError):
    """API response does not look like a claims page at all."""


@dataclass(frozen=True)
class HarvestQuery:
    language: str
    publisher_site: str | None = None
    max_age_days: int | None = None
    page_size: int = 50

    def __post_init__(self) -> None:
        if self.language not in SUPPORTED_LANGUAGES:
            raise ValueError(f"unsupported language {self.language!r}")
        if not 1 <= self.page_size <= 100:
            raise ValueError(f"page_size must be in [1, 100], got {self.page_size}")
        if self.max_age_days is not None and self.max_age_days <= 0:
            raise ValueError("max_age_days must be positive when set")

    def describe(self) -> str:
        parts = [f"language={self.language}"]
        if self.publisher_site:
            parts.append(f"site={self.publisher_site}")
        if self.max_age_days:
            parts.append(f"max_age_days={self.max_age_days}")
        return " ".join(parts)


@dataclass(frozen=True)
class RawClaimReview:
    claim_text: str
    publisher_name: str
    publisher_site: str
    review_url: str
    review_title: str
    original_rating: str
    language: str
    claimant: str | None = None
    claim_date: str | None = None


@dataclass(frozen=True)
class PageResult:
    claims: tuple[RawClaimReview, ...]
    next_page_token: str | None
    skipped_malformed: int


class Transport(Protocol):
    def get_page(
        self, query: HarvestQuery, page_token: str | None, api_key: str | None
    ) -> tuple[int, dict[str, str], bytes]: ...


class HttpTransport:
    def __init__(self, base_url: str, *, session=None, timeout_s: float = 30.0):
        self.base_url = base_url
        self._session = session or requests.Session()
        self.timeout_s = timeout_s

    def get_page(self, query, page_token, api_key):
        params: dict[str, Any] = {
            "languageCode": query.language,
            "pageSize": query.page_size,
        }
        if query.publisher_site:
            params["reviewPublisherSiteFilter"] = query.publisher_site
        if query.max_age_days:
            params["maxAgeDays"] = query.max_age_days
        if page_token:
            params["pageToken"] = page_token
        if api_key:
            params["key"] = api_key
        try:
            resp = self._session.get(self.base_url, params=params, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise Timeout(f"timeout querying {self.base_url}") from exc
        except requests.RequestException as exc:
            raise TransportError(f"error querying {self.base_url}: {exc}") from exc
        return resp.status_code, dict(resp.headers), resp.content


class FixtureTransport:
    """Serves recorded API pages from <root>/<language>/<token>.json.

    The first page of a query is page1.json; nextPageToken values inside the
    fixtures name the follow-up files.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.calls = 0

    def get_page(self, query, page_token, api_key):
        self.calls += 1
        name = page_token or "page1"
        path = self.root / query.language / f"{name}.json"
        if not path.is_file():
            return 404, {}, b""
        return 200, {}, path.read_bytes()


def _flatten_page(payload: dict[str, Any], query: HarvestQuery) -> PageResult:
    claims_raw = payload.get("claims", [])
    if not isinstance(claims_raw, list):
        raise SchemaError("claims is not a list")
    out: list[RawClaimReview] = []
    skipped = 0
    for claim in claims_raw:
        if not isinstance(claim, dict):
            skipped += 1
            continue
        text = claim.get("text")
        reviews = claim.get("claimReview", [])
        if not text or not isinstance(reviews, list):
            skipped += 1
            continue
        for review in reviews:
            if not isinstance(review, dict):
                skipped += 1
                continue
            url = review.get("url")
            rating = review.get("textualRating")
            if not url or not rating:
                skipped += 1
                continue
            publisher = review.get("publisher") or {}
            out.append(
                RawClaimReview(
                    claim_text=str(text),
                    claimant=claim.get("claimant"),
                    claim_date=claim.get("claimDate"),
                    publisher_name=str(publisher.get("name", "")),
                    publisher_site=str(publisher.get("site", "")),
                    review_url=str(url),
                    review_title=str(review.get("title", "")),
                    original_rating=str(rating),
                    language=str(review.get("languageCode") or query.language),
                )
            )
    token = payload.get("nextPageToken")
    return PageResult(claims=tuple(out), next_page_token=str(token) if token else None, skipped_malformed=skipped)


def fetch_page(
    query: HarvestQuery,
    page_token: str | None,
    transport: Transport,
    api_key: str | None = None,
) -> PageResult:
    status, headers, body = transport.get_page(query, page_token, api_key)
    if status in (401, 403):
        raise AuthError(f"API key rejected (HTTP {status})")
    if status == 429:
        retry_after = headers.get("Retry-After") or headers.get("retry-after")
        raise RateLimited("API rate limit", retry_after_s=float(retry_after) if retry_after else None)
    if status != 200:
        raise TransportError(f"HTTP {status} from claims API")
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"response is not valid json: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("response envelope is not an object")
    return _flatten_page(payload, query)


@dataclass
class HarvestManifest:
    fetched: int = 0
    written: int = 0
    deduped: int = 0
    skipped_malformed: int = 0
    pages_fetched: int = 0
    failed_queries: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, Any]:
        return {
            "fetched": self.fetched,
            "written": self.written,
            "deduped": self.deduped,
            "skipped_malformed": self.skipped_malformed,
            "pages_fetched": self.pages_fetched,
            "failed_queries": list(self.failed_queries),
        }


def harvest(
    queries: Iterable[HarvestQuery],
    sink: Callable[[RawClaimReview], None],
    *,
    transport: Transport,
    api_key: str | None = None,
    policy: RetryPolicy = RetryPolicy(),
    sleep: Callable[[float], None] = time.sleep,
    seen: set[tuple[str, str]] | None = None,
) -> HarvestManifest:
    """Run every query to pagination end, deduplicate, stream to sink.

    Duplicates are keyed on (review_url, claim_text); passing the seen set
    from a previous run makes re-harvesting idempotent. AuthError aborts the
    whole harvest; any other persistent failure is recorded per query.
    """
    manifest = HarvestManifest()
    if seen is None:
        seen = set()
    failed: list[str] = []
    for query in queries:
        token: str | None = None
        used_tokens: set[str] = set()
        try:
            while True:
                page = call_with_backoff(
                    lambda tok=token: fetch_page(query, tok, transport, api_key),
                    policy=policy,
                    sleep=sleep,
                    what=f"claims page ({query.describe()})",
                )
                manifest.pages_fetched += 1
                manifest.fetched += len(page.claims)
                manifest.skipped_malformed += page.skipped_malformed
                for raw in page.claims:
                    key = (raw.review_url, raw.claim_text)
                    if key in seen:
                        manifest.deduped += 1
                        continue
                    seen.add(key)
                    sink(raw)
                    manifest.written += 1
                token = page.next_page_token
                if token is None:
                    break
                if token in used_tokens:
                    failed.append(f"{query.describe()}: page token {token!r} repeated, aborting query")
                    break
                used_tokens.add(token)
        except AuthError:
            raise
        except (RateLimited, TransportError, SchemaError) as exc:
            logger.error("query %s failed: %s", query.describe(), exc)
            failed.append(f"{query.describe()}: {exc}")
    manifest.failed_queries = tuple(failed)
    return manifest


# --- raw record (de)serialization for the harvest checkpoint -----------------

_RAW_FIELDS = (
    "claim_text",
    "claimant",
    "claim_date",
    "publisher_name",
    "publisher_site",
    "review_url",
    "review_title",
    "original_rating",
    "language",
)


def raw_to_jsonable(raw: RawClaimReview) -> dict[str, Any]:
    return {name: getattr(raw, name) for name in _RAW_FIELDS}


def raw_from_jsonable(data: dict[str, Any]) -> RawClaimReview:
    return RawClaimReview(**{name: data.get(name) for name in _RAW_FIELDS})


class JsonlSink:
    """Appends raw reviews to a jsonl file; usable directly as harvest sink."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.count = 0

    def __call__(self, raw: RawClaimReview) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(raw_to_jsonable(raw), ensure_ascii=False, separators=(",", ":")) + "\n")
        self.count += 1

    def existing_keys(self) -> set[tuple[str, str]]:
        keys: set[tuple[str, str]] = set()
        if self.path.is_file():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    data = json.loads(line)
                    keys.add((data["review_url"], data["claim_text"]))
        return keys
