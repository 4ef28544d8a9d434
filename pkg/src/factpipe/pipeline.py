"""Stage orchestration: checkpoints, idempotent reruns, exit discipline.

Stages run in a fixed order, each reading the previous stage's jsonl
checkpoint and writing its own. A state sidecar per stage records content
hashes of input and configuration, so re-running a completed stage with
unchanged inputs is a logged no-op.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import yaml

from . import assets
from .content_type import categorize_content_type
from .evidence import AllItemsInvalid, extract_evidence, render_article_block
from .gateway import CassetteStore, Gateway, MediaAttachment, MockProvider, RemoteProvider
from .harvest import FixtureTransport, HarvestQuery, HttpTransport, RawClaimReview, harvest
from .judge import JudgeContext, JudgeVerdict, load_rubrics, evaluate_all, verdict_to_scores
from .justify import ModeMediaMismatch, generate_justification, render_evidence_block, strip_multimedia
from .keyframes import dedup_frames, sample_keyframes
from .net import RateLimited, RetryPolicy, Timeout, TransportError
from .ratings import Provenance, load_mapping_table, normalize_rating
from .records import (
    ClaimRecord,
    Criterion,
    EvidenceCategory,
    JudgeTask,
    JustificationMode,
    SUPPORTED_LANGUAGES,
    VerdictLabel,
    record_id,
)
from .report import write_report_bundle
from .scrape import (
    DirectoryFetcher,
    ExtractionEmpty,
    Fetcher,
    FetchPolicy,
    HttpStatus,
    NoAdapter,
    RobotsDisallowed,
    load_adapter_registry,
    scrape_article,
    select_adapter,
    url_slug,
)
from .store import read_dataset, write_dataset

logger = logging.getLogger(__name__)

STAGES = (
    "harvest",
    "scrape",
    "normalize",
    "categorize",
    "extract-evidence",
    "keyframes",
    "justify",
    "evaluate",
    "report",
)


class ConfigError(Exception):
    """Bad configuration or missing input; maps to exit code 2."""


class StageFailure(Exception):
    """A stage could not produce usable output; maps to exit code 1."""


@dataclass
class ProviderSettings:
    kind: str = "mock"  # mock | remote | replay
    model_id: str = "mock-1"
    base_url: str | None = None
    api_key_env: str = "FACTPIPE_MODEL_KEY"
    cassette_dir: str | None = None
    record: bool = False
    max_in_flight: int = 4


@dataclass
class RunConfig:
    workdir: Path
    languages: tuple[str, ...] = SUPPORTED_LANGUAGES
    offline: bool = False
    fixture_root: Path | None = None
    api_base_url: str = "https://factchecktools.googleapis.com/v1alpha1/claims:search"
    api_key_env: str = "FACTCHECK_API_KEY"
    page_size: int = 100
    publisher_sites: tuple[str, ...] = ()
    max_age_days: int | None = None
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    mapping_table: Path | None = None
    adapter_registry: Path | None = None
    keyframe_interval_s: float = 2.0
    hamming_threshold: int = 10
    justify_modes: tuple[str, ...] = ("TextOnly", "Multimodal")
    ablate_multimedia: bool = False
    judge_model_id: str = "mock-1"
    rubric_dir: Path | None = None
    concurrency: int = 4

    def __post_init__(self) -> None:
        self.workdir = Path(self.workdir)
        if self.fixture_root is not None:
            self.fixture_root = Path(self.fixture_root)
        bad = [lang for lang in self.languages if lang not in SUPPORTED_LANGUAGES]
        if bad:
            raise ConfigError(f"unsupported languages {bad}; supported: {list(SUPPORTED_LANGUAGES)}")
        if self.offline and self.fixture_root is None:
            raise ConfigError("offline mode needs fixture_root")
        if self.offline and self.provider.kind == "remote":
            raise ConfigError("offline mode cannot use a remote provider")
        if self.provider.kind not in ("mock", "remote", "replay"):
            raise ConfigError(f"unknown provider kind {self.provider.kind!r}")
        for mode in self.justify_modes:
            if mode not in ("TextOnly", "Multimodal"):
                raise ConfigError(f"unknown justification mode {mode!r}")


def config_from_yaml(path: str | Path, **overrides: Any) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} is not a mapping")
    provider_data = data.pop("provider", {}) or {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    provider = ProviderSettings(**provider_data)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("languages", "publisher_sites", "justify_modes"):
        if key in data and isinstance(data[key], list):
            data[key] = tuple(data[key])
    try:
        return RunConfig(provider=provider, **data)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc


# --- helpers -------------------------------------------------------------------


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _sha256_tree_stat(root: Path) -> str:
    """Cheap fingerprint of a directory: names, sizes, mtimes."""
    digest = hashlib.sha256()
    if root.is_dir():
        for path in sorted(root.rglob("*")):
            if path.is_file():
                stat = path.stat()
                digest.update(f"{path.relative_to(root)}|{stat.st_size}|{stat.st_mtime_ns}\n".encode())
    return digest.hexdigest()


def _fingerprint(data: dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True, default=str).encode("utf-8")).hexdigest()


@dataclass
class StageResult:
    stage: str
    status: str  # ok | up-to-date | failed
    summary: dict[str, Any] = field(default_factory=dict)

    def describe(self) -> str:
        bits = ", ".join(f"{k}={v}" for k, v in self.summary.items() if not isinstance(v, (list, dict)))
        return f"stage {self.stage}: {self.status}" + (f" ({bits})" if bits else "")


@dataclass
class RunReport:
    exit_code: int
    results: list[StageResult] = field(default_factory=list)
    error: str | None = None


class PipelineContext:
    def __init__(self, config: RunConfig, run_id: str):
        self.config = config
        self.run_id = run_id
        self.workdir = Path(config.workdir)
        self.checkpoints = self.workdir / "checkpoints"
        self.provenance = self.workdir / "provenance"
        self.media_dir = self.workdir / "media"
        self.reports_dir = self.workdir / "reports"
        for directory in (self.checkpoints, self.provenance, self.media_dir, self.reports_dir):
            directory.mkdir(parents=True, exist_ok=True)
        self._gateway: Gateway | None = None

    def checkpoint_path(self, stage: str) -> Path:
        return self.checkpoints / f"{stage}.jsonl"

    def state_path(self, stage: str) -> Path:
        return self.checkpoints / f"{stage}.state.json"

    def sidecar(self, name: str) -> Path:
        return self.provenance / name

    @property
    def gateway(self) -> Gateway:
        if self._gateway is None:
            settings = self.config.provider
            cassettes = CassetteStore(settings.cassette_dir) if settings.cassette_dir else None
            if settings.kind == "mock":
                provider, mode = MockProvider(model_id=settings.model_id), "live"
                if cassettes and settings.record:
                    mode = "record"
            elif settings.kind == "replay":
                if cassettes is None:
                    raise ConfigError("replay provider needs provider.cassette_dir")
                provider, mode = None, "replay"
            else:
                if not settings.base_url:
                    raise ConfigError("remote provider needs provider.base_url")
                api_key = os.environ.get(settings.api_key_env)
                if not api_key:
                    raise ConfigError(f"remote provider needs ${settings.api_key_env} set")
                provider = RemoteProvider(settings.base_url, settings.model_id, api_key=api_key)
                mode = "record" if (cassettes and settings.record) else "live"
            self._gateway = Gateway(
                provider,
                mode=mode,
                cassettes=cassettes,
                max_in_flight=settings.max_in_flight,
                audit_path=self.sidecar("model_calls.jsonl"),
                run_id=self.run_id,
            )
        return self._gateway

    def media_index_path(self) -> Path:
        return self.media_dir / "index.json"

    def load_media_index(self) -> dict[str, Any]:
        path = self.media_index_path()
        if path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))
        return {}


def _map_ordered(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving parallel map that captures per-item exceptions."""

    def guarded(item):
        try:
            return fn(item)
        except Exception as exc:  # noqa: BLE001 - stage decides what is fatal
            return exc

    if workers <= 1 or len(items) <= 1:
        return [guarded(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, items))


def _write_sidecar_lines(path: Path, lines: list[dict[str, Any]]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line, ensure_ascii=False, separators=(",", ":")) + "\n")


# --- stages ---------------------------------------------------------------------


def stage_harvest(ctx: PipelineContext) -> tuple[list[ClaimRecord], dict[str, Any]]:
    config = ctx.config
    queries = []
    for language in config.languages:
        sites = config.publisher_sites or (None,)
        for site in sites:
            queries.append(
                HarvestQuery(
                    language=language,
                    publisher_site=site,
                    max_age_days=config.max_age_days,
                    page_size=config.page_size,
                )
            )
    if config.offline:
        # retrying a deterministic local file read only wastes wall clock
        transport = FixtureTransport(config.fixture_root / "api")
        api_key = None
        policy = RetryPolicy(max_attempts=1)
    else:
        transport = HttpTransport(config.api_base_url)
        api_key = os.environ.get(config.api_key_env)
        if not api_key:
            raise ConfigError(f"live harvest needs ${config.api_key_env} set")
        policy = RetryPolicy()
    raws: list[RawClaimReview] = []
    manifest = harvest(queries, raws.append, transport=transport, api_key=api_key, policy=policy)
    records: list[ClaimRecord] = []
    skipped_language = 0
    for raw in raws:
        if raw.language not in SUPPORTED_LANGUAGES:
            skipped_language += 1
            continue
        publisher = raw.publisher_site or (raw.review_url.split("/")[2] if "://" in raw.review_url else "")
        records.append(
            ClaimRecord(
                id=record_id(raw.review_url, raw.claim_text),
                language=raw.language,
                claim_text=raw.claim_text,
                claimant=raw.claimant,
                claim_date=raw.claim_date,
                publisher=publisher.casefold(),
                review_url=raw.review_url,
                review_title=raw.review_title,
                original_rating=raw.original_rating,
                # placeholder until the normalize stage maps the raw rating
                verdict=VerdictLabel.OTHER,
            )
        )
    if queries and not records:
        raise StageFailure("harvest produced no records")
    summary = manifest.as_dict()
    summary["records"] = len(records)
    summary["skipped_language"] = skipped_language
    return records, summary


def stage_scrape(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    config = ctx.config
    registry = load_adapter_registry(config.adapter_registry or assets.default_adapter_registry_path())
    if config.offline:
        fetcher = DirectoryFetcher(config.fixture_root / "html")
    else:
        fetcher = Fetcher(FetchPolicy())
    out: list[ClaimRecord] = []
    scraped = 0
    failures: list[dict[str, Any]] = []
    adapter_counts: dict[str, int] = {}
    for record in records:
        try:
            adapter = select_adapter(record.review_url, registry)
            article = scrape_article(record.review_url, adapter, fetcher)
            out.append(replace(record, article=article))
            scraped += 1
            adapter_counts[adapter.adapter_id] = adapter_counts.get(adapter.adapter_id, 0) + 1
        except (HttpStatus, RobotsDisallowed, ExtractionEmpty, NoAdapter, TransportError, Timeout, RateLimited) as exc:
            logger.warning("scrape failed for %s: %s", record.review_url, exc)
            failures.append({"record_id": record.id, "url": record.review_url, "error": str(exc)})
            out.append(record)
    _write_sidecar_lines(ctx.sidecar("scrape_failures.jsonl"), failures)
    if records and scraped == 0:
        raise StageFailure("scrape stage fetched no article at all")
    return out, {"scraped": scraped, "failed": len(failures), "adapters": adapter_counts}


def stage_normalize(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    config = ctx.config
    table = load_mapping_table(config.mapping_table or assets.default_mapping_table_path())
    out: list[ClaimRecord] = []
    provenance_counts = {p.value: 0 for p in Provenance}
    audit: list[dict[str, Any]] = []
    for record in records:
        verdict, provenance = normalize_rating(record.original_rating, record.publisher, table)
        provenance_counts[provenance.value] += 1
        audit.append(
            {
                "record_id": record.id,
                "publisher": record.publisher,
                "original_rating": record.original_rating,
                "verdict": verdict.value,
                "provenance": provenance.value,
            }
        )
        out.append(replace(record, verdict=verdict))
    _write_sidecar_lines(ctx.sidecar("normalize_audit.jsonl"), audit)
    total = len(records)
    fallback_fraction = provenance_counts[Provenance.FALLBACK.value] / total if total else 0.0
    summary = {
        "records": total,
        "table_version": table.version,
        "fallback_fraction": round(fallback_fraction, 4),
        **provenance_counts,
    }
    return out, summary


def stage_categorize(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    gateway = ctx.gateway
    model_id = ctx.config.provider.model_id

    def classify(record: ClaimRecord):
        return categorize_content_type(record.claim_text, gateway, language=record.language, model_id=model_id)

    results = _map_ordered(classify, records, ctx.config.concurrency)
    out: list[ClaimRecord] = []
    defaulted_lines: list[dict[str, Any]] = []
    failures = 0
    for record, result in zip(records, results):
        if isinstance(result, Exception):
            logger.error("categorize failed for %.12s: %s", record.id, result)
            failures += 1
            out.append(record)
            continue
        content_type, defaulted = result
        if defaulted:
            defaulted_lines.append({"record_id": record.id, "claim_text": record.claim_text})
        out.append(replace(record, content_type=content_type))
    _write_sidecar_lines(ctx.sidecar("categorize_defaults.jsonl"), defaulted_lines)
    if records and failures == len(records):
        raise StageFailure("content type classification failed for every record")
    return out, {"records": len(records), "defaulted": len(defaulted_lines), "failed": failures}


def stage_extract_evidence(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    gateway = ctx.gateway
    model_id = ctx.config.provider.model_id

    def extract(record: ClaimRecord):
        if record.article is None:
            return None
        return extract_evidence(
            record, record.article, gateway, language=record.language, model_id=model_id
        )

    results = _map_ordered(extract, records, ctx.config.concurrency)
    out: list[ClaimRecord] = []
    violation_lines: list[dict[str, Any]] = []
    manual_review: list[dict[str, Any]] = []
    extracted = 0
    skipped = 0
    failures = 0
    for record, result in zip(records, results):
        if result is None:
            skipped += 1
            out.append(record)
            continue
        if isinstance(result, AllItemsInvalid):
            manual_review.append({"record_id": record.id, "reason": str(result)})
            out.append(record)
            continue
        if isinstance(result, Exception):
            logger.error("evidence extraction failed for %.12s: %s", record.id, result)
            failures += 1
            out.append(record)
            continue
        for violation in result.violations:
            violation_lines.append(
                {
                    "record_id": record.id,
                    "code": violation.code,
                    "message": violation.message,
                    "path": violation.path,
                    "retried": result.retried,
                }
            )
        out.append(replace(record, evidence=result.evidence))
        extracted += 1
    _write_sidecar_lines(ctx.sidecar("evidence_violations.jsonl"), violation_lines)
    _write_sidecar_lines(ctx.sidecar("evidence_manual_review.jsonl"), manual_review)
    if records and extracted == 0 and skipped < len(records):
        raise StageFailure("evidence extraction produced nothing")
    return out, {
        "extracted": extracted,
        "skipped_no_article": skipped,
        "manual_review": len(manual_review),
        "violations": len(violation_lines),
        "failed": failures,
    }


def stage_keyframes(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    config = ctx.config
    index: dict[str, Any] = {}
    videos_done = 0
    sampled = 0
    kept_total = 0
    missing = 0
    for record in records:
        if record.article is None or not record.article.videos:
            continue
        per_video: dict[str, Any] = {}
        for video in record.article.videos:
            frames = None
            if config.offline or video.local_path is None:
                frame_dir = (
                    config.fixture_root / "media" / url_slug(record.review_url) / video.id
                    if config.fixture_root
                    else None
                )
                if frame_dir and frame_dir.is_dir():
                    frames = sample_keyframes(frame_dir, config.keyframe_interval_s, media_id=video.id)
                else:
                    missing += 1
                    continue
            else:
                out_dir = ctx.media_dir / record.id / video.id
                try:
                    frames = sample_keyframes(
                        video.local_path,
                        config.keyframe_interval_s,
                        media_id=video.id,
                        out_dir=out_dir,
                        duration_s=video.duration_s,
                    )
                except Exception as exc:  # decoder trouble is per-video, not fatal
                    logger.warning("keyframes failed for %s/%s: %s", record.id, video.id, exc)
                    continue
            sampled += len(frames)
            dedup = dedup_frames(frames, config.hamming_threshold)
            kept_total += len(dedup)
            videos_done += 1
            per_video[video.id] = [
                {"timestamp_s": f.timestamp_s, "image_path": f.image_path, "phash": f.phash} for f in dedup
            ]
        if per_video:
            index[record.id] = per_video
    ctx.media_index_path().write_text(
        json.dumps(index, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return list(records), {
        "videos": videos_done,
        "frames_sampled": sampled,
        "frames_kept": kept_total,
        "missing_sources": missing,
    }


def stage_justify(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    config = ctx.config
    gateway = ctx.gateway
    model_id = config.provider.model_id
    media_index = ctx.load_media_index()
    flags_lines: list[dict[str, Any]] = []
    generated = 0
    skipped_no_evidence = 0
    skipped_mode = 0
    out: list[ClaimRecord] = []
    for record in records:
        if record.evidence is None or not record.evidence.items:
            skipped_no_evidence += 1
            out.append(record)
            continue
        justifications = list(record.justifications)
        for mode_name in config.justify_modes:
            mode = JustificationMode(mode_name)
            evidence = record.evidence
            attachments: tuple[MediaAttachment, ...] = ()
            record_has_media = bool(record.article and (record.article.images or record.article.videos))
            if mode is JustificationMode.MULTIMODAL:
                frames = []
                for video_id, entries in sorted(media_index.get(record.id, {}).items()):
                    for entry in entries:
                        frames.append(
                            MediaAttachment(
                                mime_type="image/jpeg",
                                path=entry["image_path"],
                                caption=f"{video_id} frame",
                                timestamp_s=entry["timestamp_s"],
                            )
                        )
                attachments = tuple(frames)
                has_mm_items = any(
                    item.category is EvidenceCategory.MULTIMEDIA_EVIDENCE for item in evidence.items
                )
                if not record_has_media and not has_mm_items:
                    skipped_mode += 1
                    continue
            elif config.ablate_multimedia:
                evidence = strip_multimedia(evidence)
                if not evidence.items:
                    skipped_no_evidence += 1
                    continue
            try:
                justification, flags = generate_justification(
                    record.claim_text,
                    record.verdict,
                    evidence,
                    mode,
                    gateway,
                    attachments=attachments,
                    record_has_media=record_has_media,
                    model_id=model_id,
                )
            except ModeMediaMismatch:
                skipped_mode += 1
                continue
            justifications.append(justification)
            generated += 1
            for flag in flags:
                flags_lines.append({"record_id": record.id, "mode": mode.value, "flag": flag})
        out.append(replace(record, justifications=tuple(justifications)))
    _write_sidecar_lines(ctx.sidecar("justify_flags.jsonl"), flags_lines)
    if records and generated == 0 and skipped_no_evidence < len(records):
        raise StageFailure("justification stage generated nothing")
    return out, {
        "generated": generated,
        "skipped_no_evidence": skipped_no_evidence,
        "skipped_mode": skipped_mode,
        "flags": len(flags_lines),
    }


def stage_evaluate(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    config = ctx.config
    gateway = ctx.gateway
    rubrics = load_rubrics(config.rubric_dir)
    judge_model_id = config.judge_model_id
    verdict_lines: list[dict[str, Any]] = []
    out: list[ClaimRecord] = []
    evaluated = 0
    failed_criteria = 0
    for record in records:
        evaluations = list(record.evaluations)
        context = JudgeContext(
            claim_text=record.claim_text,
            verdict=record.verdict,
            language=record.language,
            article_block=render_article_block(record.article) if record.article else None,
        )
        verdicts: list[JudgeVerdict] = []
        if record.evidence and record.evidence.items:
            output = render_evidence_block(record.evidence)
            verdicts.append(
                evaluate_all(
                    output,
                    context,
                    rubrics,
                    JudgeTask.EVIDENCE_EXTRACTION,
                    gateway,
                    model_id=record.evidence.model_id,
                    mode=None,
                    judge_model_id=judge_model_id,
                )
            )
        for justification in record.justifications:
            verdicts.append(
                evaluate_all(
                    justification.text,
                    context,
                    rubrics,
                    JudgeTask.JUSTIFICATION_GENERATION,
                    gateway,
                    model_id=justification.model_id,
                    mode=justification.mode.value,
                    judge_model_id=judge_model_id,
                )
            )
        for verdict in verdicts:
            evaluated += 1
            failed_criteria += len(verdict.failed)
            evaluations.extend(verdict_to_scores(verdict, judge_model_id))
            verdict_lines.append(
                {
                    "record_id": record.id,
                    "task": verdict.task.value,
                    "model_id": verdict.model_id,
                    "mode": verdict.mode,
                    "language": verdict.language,
                    "scores": {c.value: s for c, s in verdict.scores.items()},
                    "failed": [c.value for c in verdict.failed],
                }
            )
        out.append(replace(record, evaluations=tuple(evaluations)))
    _write_sidecar_lines(ctx.sidecar("judge_verdicts.jsonl"), verdict_lines)
    return out, {"outputs_evaluated": evaluated, "failed_criteria": failed_criteria}


def _load_judge_verdicts(ctx: PipelineContext) -> list[JudgeVerdict]:
    path = ctx.sidecar("judge_verdicts.jsonl")
    verdicts: list[JudgeVerdict] = []
    if not path.is_file():
        return verdicts
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        verdict = JudgeVerdict(
            task=JudgeTask(data["task"]),
            model_id=data["model_id"],
            mode=data.get("mode"),
            language=data.get("language"),
        )
        verdict.scores = {Criterion(k): float(v) for k, v in data.get("scores", {}).items()}
        verdict.failed = tuple(Criterion(c) for c in data.get("failed", ()))
        verdicts.append(verdict)
    return verdicts


def stage_report(ctx: PipelineContext, records: list[ClaimRecord]) -> tuple[list[ClaimRecord], dict[str, Any]]:
    verdicts = _load_judge_verdicts(ctx)
    written = write_report_bundle(records, ctx.reports_dir, verdicts=verdicts)
    return list(records), {"files": len(written), "reports_dir": str(ctx.reports_dir)}


# --- driver ---------------------------------------------------------------------

_STAGE_FUNCS: dict[str, Callable] = {
    "harvest": stage_harvest,
    "scrape": stage_scrape,
    "normalize": stage_normalize,
    "categorize": stage_categorize,
    "extract-evidence": stage_extract_evidence,
    "keyframes": stage_keyframes,
    "justify": stage_justify,
    "evaluate": stage_evaluate,
    "report": stage_report,
}


def _stage_fingerprint(ctx: PipelineContext, stage: str) -> str:
    config = ctx.config
    common: dict[str, Any] = {"stage": stage, "offline": config.offline}
    if stage == "harvest":
        common.update(
            languages=config.languages,
            page_size=config.page_size,
            publisher_sites=config.publisher_sites,
            max_age_days=config.max_age_days,
            fixtures=_sha256_tree_stat(config.fixture_root / "api") if config.offline else "live",
        )
    elif stage == "scrape":
        common.update(
            registry=str(config.adapter_registry or "packaged"),
            fixtures=_sha256_tree_stat(config.fixture_root / "html") if config.offline else "live",
        )
    elif stage == "normalize":
        common.update(table=str(config.mapping_table or "packaged"))
    elif stage in ("categorize", "extract-evidence", "justify", "evaluate"):
        common.update(
            provider_kind=config.provider.kind,
            model_id=config.provider.model_id,
            judge_model_id=config.judge_model_id if stage == "evaluate" else "",
            justify_modes=config.justify_modes if stage == "justify" else (),
            ablate=config.ablate_multimedia if stage == "justify" else False,
        )
    elif stage == "keyframes":
        common.update(
            interval=config.keyframe_interval_s,
            hamming=config.hamming_threshold,
            fixtures=_sha256_tree_stat(config.fixture_root / "media") if config.fixture_root else "none",
        )
    return _fingerprint(common)


def _input_stage_for(stage: str, ctx: PipelineContext, active: set[str]) -> str | None:
    """Name of the checkpoint a stage reads, or None for harvest."""
    index = STAGES.index(stage)
    if index == 0:
        return None
    if stage == "report":
        # report summarizes whatever the most advanced checkpoint holds
        for candidate in reversed(STAGES[:index]):
            if candidate in active or ctx.checkpoint_path(candidate).is_file():
                return candidate
        raise ConfigError("report needs at least one existing checkpoint in the workdir")
    return STAGES[index - 1]


def run(config: RunConfig, stages: Sequence[str] | None = None) -> RunReport:
    requested = list(stages) if stages else list(STAGES)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stages {unknown}; valid: {list(STAGES)}")
    ordered = [s for s in STAGES if s in requested]
    run_id = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S.%fZ")
    ctx = PipelineContext(config, run_id)
    report = RunReport(exit_code=0)
    active = set(ordered)
    produced_in_run: set[str] = set()
    for stage in ordered:
        input_stage = _input_stage_for(stage, ctx, produced_in_run)
        input_path = ctx.checkpoint_path(input_stage) if input_stage else None
        if input_path is not None and not input_path.is_file():
            raise ConfigError(
                f"stage {stage} needs the {input_stage} checkpoint at {input_path}; run that stage first"
            )
        fingerprint = _stage_fingerprint(ctx, stage)
        input_hash = _sha256_file(input_path) if input_path else "none"
        state_path = ctx.state_path(stage)
        output_path = ctx.checkpoint_path(stage)
        if state_path.is_file() and (output_path.is_file() or stage == "report"):
            state = json.loads(state_path.read_text(encoding="utf-8"))
            if state.get("input_hash") == input_hash and state.get("config_fingerprint") == fingerprint:
                result = StageResult(stage=stage, status="up-to-date", summary=state.get("summary", {}))
                logger.info("%s", result.describe())
                report.results.append(result)
                produced_in_run.add(stage)
                continue
        try:
            if stage == "harvest":
                records, summary = stage_harvest(ctx)
            else:
                records_in = read_dataset(input_path)
                records, summary = _STAGE_FUNCS[stage](ctx, records_in)
        except (ConfigError, StageFailure):
            raise
        except Exception as exc:
            raise StageFailure(f"stage {stage} crashed: {exc}") from exc
        if stage != "report":
            manifest = write_dataset(records, output_path, stage_versions={"stage": stage, "run_id": run_id})
            summary["checkpoint"] = str(output_path)
            summary["quarantined"] = manifest.quarantined_count
        state_path.write_text(
            json.dumps(
                {
                    "stage": stage,
                    "input_hash": input_hash,
                    "config_fingerprint": fingerprint,
                    "summary": summary,
                    "run_id": run_id,
                },
                ensure_ascii=False,
                indent=2,
                default=str,
            )
            + "\n",
            encoding="utf-8",
        )
        result = StageResult(stage=stage, status="ok", summary=summary)
        logger.info("%s", result.describe())
        report.results.append(result)
        produced_in_run.add(stage)
    return report
