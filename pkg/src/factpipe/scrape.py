"""Article scraping: adapter selection, polite fetching, content extraction.

Publisher adapters are declarative selector bundles loaded from a registry
asset. Hosts without a dedicated adapter fall back to generic-readability,
which scopes the same extraction to the densest text container on the page.
Video duration is read from a data-duration attribute when the page carries
one; probing media files is out of scope for the scraper.
"""

from __future__ import annotations

import fnmatch
import logging
import re
import time
import urllib.robotparser
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urljoin, urlparse

import requests
import yaml

from .htmldom import Element, parse_html
from .net import RateLimited, Timeout, TransportError, call_with_backoff, RetryPolicy
from .records import ArticleContent, ImageRef, VideoRef, normalize_ws

logger = logging.getLogger(__name__)

GENERIC_ADAPTER_ID = "generic-readability"


class AdapterError(ValueError):
    pass


class NoAdapter(LookupError):
    pass


class HttpStatus(Exception):
    def __init__(self, status: int, url: str):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status
        self.url = url


class RobotsDisallowed(Exception):
    pass


class ExtractionEmpty(Exception):
    """The page yielded no content paragraphs."""


@dataclass(frozen=True)
class AdapterSpec:
    adapter_id: str
    host_patterns: tuple[str, ...]
    content_selectors: tuple[str, ...]
    image_selectors: tuple[str, ...] = ("img",)
    caption_selectors: tuple[str, ...] = ("figcaption",)
    video_selectors: tuple[str, ...] = ("video",)
    drop_selectors: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.adapter_id:
            raise AdapterError("adapter_id must be non-empty")
        if not self.host_patterns:
            raise AdapterError(f"adapter {self.adapter_id}: needs at least one host pattern")
        if not self.content_selectors or not all(s.strip() for s in self.content_selectors):
            raise AdapterError(f"adapter {self.adapter_id}: content selectors must be non-empty")


@dataclass(frozen=True)
class AdapterRegistry:
    version: str
    adapters: tuple[AdapterSpec, ...]

    def __post_init__(self) -> None:
        ids = [a.adapter_id for a in self.adapters]
        if len(ids) != len(set(ids)):
            raise AdapterError("duplicate adapter ids in registry")
        if GENERIC_ADAPTER_ID not in ids:
            raise AdapterError(f"registry must include the {GENERIC_ADAPTER_ID} fallback")


def load_adapter_registry(path: str | Path) -> AdapterRegistry:
    raw = Path(path).read_text(encoding="utf-8")
    version = None
    for line in raw.splitlines():
        if line.startswith("# version:"):
            version = line.split(":", 1)[1].strip()
            break
    data = yaml.safe_load(raw)
    if not isinstance(data, dict) or "adapters" not in data:
        raise AdapterError(f"{path}: malformed adapter registry")
    adapters = []
    for entry in data["adapters"]:
        adapters.append(
            AdapterSpec(
                adapter_id=entry["id"],
                host_patterns=tuple(entry["hosts"]),
                content_selectors=tuple(entry["content"]),
                image_selectors=tuple(entry.get("images", ("img",))),
                caption_selectors=tuple(entry.get("captions", ("figcaption",))),
                video_selectors=tuple(entry.get("videos", ("video",))),
                drop_selectors=tuple(entry.get("drop", ())),
            )
        )
    return AdapterRegistry(version=version or "unversioned", adapters=tuple(adapters))


def select_adapter(url: str, registry: AdapterRegistry) -> AdapterSpec:
    host = (urlparse(url).hostname or "").casefold()
    if not host:
        raise NoAdapter(f"cannot determine host for {url!r}")
    for adapter in registry.adapters:
        for pattern in adapter.host_patterns:
            if fnmatch.fnmatch(host, pattern.casefold()):
                return adapter
    raise NoAdapter(f"no adapter for host {host}")


# --- fetching ----------------------------------------------------------------


@dataclass(frozen=True)
class FetchPolicy:
    user_agent: str = "factpipe/0.1 (batch dataset builder)"
    timeout_s: float = 20.0
    per_host_delay_s: float = 0.5
    max_retries: int = 3
    respect_robots: bool = True


@dataclass(frozen=True)
class FetchResult:
    url: str
    status: int
    content: bytes
    content_type: str

    def text(self) -> str:
        charset = "utf-8"
        m = re.search(r"charset=([\w-]+)", self.content_type)
        if m:
            charset = m.group(1)
        return self.content.decode(charset, errors="replace")


class Fetcher:
    """HTTP fetcher honouring robots.txt and a per-host politeness delay."""

    def __init__(self, policy: FetchPolicy, *, session=None, sleep=time.sleep, clock=time.monotonic):
        self.policy = policy
        self._session = session or requests.Session()
        self._sleep = sleep
        self._clock = clock
        self._robots: dict[str, urllib.robotparser.RobotFileParser | None] = {}
        self._last_done: dict[str, float] = {}

    def _robots_for(self, scheme: str, host: str):
        if host in self._robots:
            return self._robots[host]
        parser = urllib.robotparser.RobotFileParser()
        try:
            resp = self._session.get(
                f"{scheme}://{host}/robots.txt",
                timeout=self.policy.timeout_s,
                headers={"User-Agent": self.policy.user_agent},
            )
            if resp.status_code >= 400:
                parser = None  # no usable robots file: allow everything
            else:
                parser.parse(resp.text.splitlines())
        except requests.RequestException:
            parser = None
        self._robots[host] = parser
        return parser

    def _wait_for_host(self, host: str) -> None:
        last = self._last_done.get(host)
        if last is None:
            return
        remaining = last + self.policy.per_host_delay_s - self._clock()
        if remaining > 0:
            self._sleep(remaining)

    def _get_once(self, url: str) -> FetchResult:
        try:
            resp = self._session.get(
                url, timeout=self.policy.timeout_s, headers={"User-Agent": self.policy.user_agent}
            )
        except requests.Timeout as exc:
            raise Timeout(f"timeout fetching {url}") from exc
        except requests.RequestException as exc:
            raise TransportError(f"error fetching {url}: {exc}") from exc
        if resp.status_code == 429:
            retry_after = resp.headers.get("Retry-After")
            raise RateLimited(f"429 for {url}", retry_after_s=float(retry_after) if retry_after else None)
        if resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code} for {url}")
        if resp.status_code >= 400:
            raise HttpStatus(resp.status_code, url)
        return FetchResult(
            url=url,
            status=resp.status_code,
            content=resp.content,
            content_type=resp.headers.get("Content-Type", ""),
        )

    def fetch_url(self, url: str) -> FetchResult:
        parsed = urlparse(url)
        host = (parsed.hostname or "").casefold()
        if not host:
            raise TransportError(f"relative or malformed url {url!r}")
        if self.policy.respect_robots:
            robots = self._robots_for(parsed.scheme or "https", host)
            if robots is not None and not robots.can_fetch(self.policy.user_agent, url):
                raise RobotsDisallowed(f"robots.txt disallows {url}")
        self._wait_for_host(host)
        try:
            return call_with_backoff(
                lambda: self._get_once(url),
                policy=RetryPolicy(base_delay_s=1.0, factor=2.0, max_attempts=max(1, self.policy.max_retries)),
                sleep=self._sleep,
                what=f"GET {url}",
            )
        finally:
            self._last_done[host] = self._clock()


def url_slug(url: str) -> str:
    """Filesystem-safe name for a URL, scheme dropped."""
    without_scheme = re.sub(r"^[a-zA-Z][\w+.-]*://", "", url)
    return re.sub(r"[^A-Za-z0-9._-]+", "-", without_scheme).strip("-")


class DirectoryFetcher:
    """Offline fetcher resolving urls to recorded pages under a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def fetch_url(self, url: str) -> FetchResult:
        path = self.root / f"{url_slug(url)}.html"
        if not path.is_file():
            raise HttpStatus(404, url)
        return FetchResult(url=url, status=200, content=path.read_bytes(), content_type="text/html; charset=utf-8")


# --- extraction ---------------------------------------------------------------


def _prune(root: Element, selectors: tuple[str, ...]) -> None:
    doomed: set[int] = set()
    victims: list[Element] = []
    for selector in selectors:
        for node in root.select(selector):
            if id(node) not in doomed:
                doomed.add(id(node))
                victims.append(node)
    for node in victims:
        if node.parent is not None and node in node.parent.children:
            node.parent.children.remove(node)


_CONTAINER_TAGS = frozenset({"article", "main", "section", "div", "body"})


def _densest_container(root: Element) -> Element:
    """Readability-style scoring: each paragraph credits its nearest container
    ancestor in full and the next one half, so a wrapper holding everything
    does not beat the actual content block."""
    scores: dict[int, float] = {}
    nodes: dict[int, Element] = {}
    for p in root.select("p"):
        text_len = len(normalize_ws(p.text()))
        if not text_len:
            continue
        credits = [float(text_len), text_len / 2.0]
        for ancestor in p.ancestors():
            if ancestor.tag in _CONTAINER_TAGS:
                scores[id(ancestor)] = scores.get(id(ancestor), 0.0) + credits.pop(0)
                nodes[id(ancestor)] = ancestor
                if not credits:
                    break
    best = root
    best_score = -1.0
    best_depth = -1
    for key, node in nodes.items():
        score = scores[key]
        depth = sum(1 for _ in node.ancestors())
        if score > best_score or (score == best_score and depth > best_depth):
            best, best_score, best_depth = node, score, depth
    return best


def _first_matching(container: Element, selectors: tuple[str, ...]) -> list[Element]:
    for selector in selectors:
        nodes = container.select(selector)
        if nodes:
            return nodes
    return []


def _caption_for(img: Element, selectors: tuple[str, ...]) -> str | None:
    scope = None
    for ancestor in img.ancestors():
        if ancestor.tag == "figure":
            scope = ancestor
            break
    if scope is None:
        return None
    for selector in selectors:
        for node in scope.select(selector):
            caption = normalize_ws(node.text())
            if caption:
                return caption
    return None


def extract_article(html_text: str, url: str, adapter: AdapterSpec) -> ArticleContent:
    """Pure extraction: html to ArticleContent, fetched_at left unset."""
    root = parse_html(html_text)
    _prune(root, adapter.drop_selectors)
    scope = _densest_container(root) if adapter.adapter_id == GENERIC_ADAPTER_ID else root

    paragraphs = []
    for node in _first_matching(scope, adapter.content_selectors):
        text = normalize_ws(node.text())
        if text:
            paragraphs.append(text)
    if not paragraphs:
        raise ExtractionEmpty(f"no content paragraphs extracted from {url}")

    images: list[ImageRef] = []
    seen_srcs: set[str] = set()
    for node in _first_matching(scope, adapter.image_selectors):
        src = node.get("src") or node.get("data-src") or ""
        if not src.strip():
            continue
        resolved = urljoin(url, src.strip())
        if resolved in seen_srcs:
            continue
        seen_srcs.add(resolved)
        images.append(
            ImageRef(
                id=f"IMG{len(images) + 1}",
                src_url=resolved,
                caption=_caption_for(node, adapter.caption_selectors),
            )
        )

    videos: list[VideoRef] = []
    seen_srcs.clear()
    for node in _first_matching(scope, adapter.video_selectors):
        src = node.get("src") or ""
        if not src.strip():
            for child in node.children:
                if isinstance(child, Element) and child.tag == "source" and child.get("src"):
                    src = child.get("src") or ""
                    break
        if not src.strip():
            continue
        resolved = urljoin(url, src.strip())
        if resolved in seen_srcs:
            continue
        seen_srcs.add(resolved)
        duration = node.get("data-duration")
        videos.append(
            VideoRef(
                id=f"VID{len(videos) + 1}",
                src_url=resolved,
                duration_s=float(duration) if duration else None,
            )
        )

    return ArticleContent(url=url, paragraphs=tuple(paragraphs), images=tuple(images), videos=tuple(videos))


def scrape_article(url: str, adapter: AdapterSpec, fetcher) -> ArticleContent:
    """Fetch one page through the given fetcher and extract its content."""
    result = fetcher.fetch_url(url)
    article = extract_article(result.text(), url, adapter)
    fetched_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return ArticleContent(
        url=article.url,
        paragraphs=article.paragraphs,
        images=article.images,
        videos=article.videos,
        fetched_at=fetched_at,
    )
