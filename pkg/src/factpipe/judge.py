"""Rubric-driven scoring of extracted evidence and generated justifications.

One gateway call per (output, criterion). The response grammar is a
"Score: <int>" line followed by a "Rationale:" line; models that itemize
their arithmetic may add "Awarded:"/"Penalty:" lines which are parsed and
cross-checked. Scores clamp to [0, 100] with a flag rather than failing.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .assets import default_rubric_dir, load_prompt
from .gateway import CompletionRequest, Gateway, MediaAttachment
from .records import (
    Criterion,
    EvaluationScore,
    EvidenceCategory,
    JudgeTask,
    VerdictLabel,
)

logger = logging.getLogger(__name__)

JUDGE_TEMPERATURE = 0.0


class RubricError(ValueError):
    pass


class EvaluationFailed(Exception):
    """Unparseable judge output after the one retry."""


@dataclass(frozen=True)
class ScoreItem:
    description: str
    weight: float


@dataclass(frozen=True)
class PenaltyItem:
    description: str
    deduction: float


@dataclass(frozen=True)
class Rubric:
    task: JudgeTask
    criterion: Criterion
    version: str
    evaluation_steps: tuple[str, ...]
    score_items: tuple[ScoreItem, ...]
    penalty_items: tuple[PenaltyItem, ...] = ()
    scale: tuple[int, int] = (0, 100)

    def __post_init__(self) -> None:
        if not self.evaluation_steps:
            raise RubricError(f"rubric {self.version}: needs at least one evaluation step")
        if not self.score_items:
            raise RubricError(f"rubric {self.version}: needs at least one score item")
        total = sum(item.weight for item in self.score_items)
        if abs(total - 100.0) > 1e-6:
            raise RubricError(f"rubric {self.version}: score item weights sum to {total}, expected 100")
        for item in self.penalty_items:
            if not 0 < item.deduction <= 100:
                raise RubricError(f"rubric {self.version}: deduction {item.deduction} outside (0, 100]")
        if self.scale != (0, 100):
            raise RubricError(f"rubric {self.version}: scale must be [0, 100]")


def load_rubric(path: str | Path) -> Rubric:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    try:
        return Rubric(
            task=JudgeTask(data["task"]),
            criterion=Criterion(data["criterion"]),
            version=data["version"],
            evaluation_steps=tuple(data["evaluation_steps"]),
            score_items=tuple(ScoreItem(i["description"], float(i["weight"])) for i in data["score_items"]),
            penalty_items=tuple(
                PenaltyItem(i["description"], float(i["deduction"])) for i in data.get("penalty_items", ())
            ),
            scale=tuple(data.get("scale", (0, 100))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RubricError):
            raise
        raise RubricError(f"{path}: malformed rubric: {exc}") from exc


def load_rubrics(directory: str | Path | None = None) -> dict[tuple[JudgeTask, Criterion], Rubric]:
    root = Path(directory) if directory else default_rubric_dir()
    rubrics: dict[tuple[JudgeTask, Criterion], Rubric] = {}
    for path in sorted(root.glob("*.yaml")):
        rubric = load_rubric(path)
        key = (rubric.task, rubric.criterion)
        if key in rubrics:
            raise RubricError(f"duplicate rubric for {key[0].value}/{key[1].value}")
        rubrics[key] = rubric
    return rubrics


@dataclass(frozen=True)
class JudgeContext:
    claim_text: str
    verdict: VerdictLabel
    language: str = "fr"
    article_block: str | None = None
    attachments: tuple[MediaAttachment, ...] = ()


def build_judge_prompt(
    rubric: Rubric, context: JudgeContext, output_under_test: str
) -> tuple[str, str]:
    """Returns (system_text, user_text)."""
    system = load_prompt("judge_system")
    user = load_prompt("judge_user")
    steps = "\n".join(f"{n}. {step}" for n, step in enumerate(rubric.evaluation_steps, start=1))
    score_lines = "\n".join(f"- (weight {item.weight:g}) {item.description}" for item in rubric.score_items)
    penalty_lines = (
        "\n".join(f"- (deduct {item.deduction:g}) {item.description}" for item in rubric.penalty_items)
        or "(none)"
    )
    context_lines = [f"Claim: {context.claim_text}", f"Verdict: {context.verdict.value}"]
    if rubric.task is JudgeTask.EVIDENCE_EXTRACTION:
        names = ", ".join(cat.value for cat in EvidenceCategory)
        context_lines.append(f"Valid evidence categories: {names}")
    if context.article_block:
        context_lines.append("Article:")
        context_lines.append(context.article_block)
    user_text = user.render(
        task=rubric.task.value,
        criterion=rubric.criterion.value,
        steps_block=steps,
        score_items_block=score_lines,
        penalty_items_block=penalty_lines,
        context_block="\n".join(context_lines),
        output_block=output_under_test,
    )
    return system.text, user_text


_SCORE_RE = re.compile(r"^\s*Score\s*:\s*(-?\d+)\s*$", re.MULTILINE)
_RATIONALE_RE = re.compile(r"^\s*Rationale\s*:\s*(.*)$", re.MULTILINE | re.DOTALL)
_AWARDED_RE = re.compile(r"^Awarded:\s*(.+?)\s*\(\+(\d+(?:\.\d+)?)\)\s*$", re.MULTILINE)
_PENALTY_RE = re.compile(r"^Penalty:\s*(.+?)\s*\(-(\d+(?:\.\d+)?)\)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class ParsedJudgeResponse:
    score: int
    rationale: str
    clamped: bool
    awarded: tuple[tuple[str, float], ...] = ()
    penalties: tuple[tuple[str, float], ...] = ()


def itemized_total(awarded: tuple[tuple[str, float], ...], penalties: tuple[tuple[str, float], ...]) -> float:
    """Sum of awarded weights minus deductions, floored at zero."""
    return max(0.0, sum(w for _, w in awarded) - sum(d for _, d in penalties))


def parse_judge_response(text: str) -> ParsedJudgeResponse | None:
    score_match = _SCORE_RE.search(text)
    if score_match is None:
        return None
    raw_score = int(score_match.group(1))
    clamped = raw_score < 0 or raw_score > 100
    score = min(100, max(0, raw_score))
    rationale_match = _RATIONALE_RE.search(text)
    rationale = rationale_match.group(1).strip() if rationale_match else ""
    awarded = tuple((desc, float(w)) for desc, w in _AWARDED_RE.findall(text))
    penalties = tuple((desc, float(d)) for desc, d in _PENALTY_RE.findall(text))
    return ParsedJudgeResponse(score=score, rationale=rationale, clamped=clamped, awarded=awarded, penalties=penalties)


@dataclass(frozen=True)
class EvaluationOutcome:
    criterion: Criterion
    score: float
    rationale: str
    clamped: bool
    raw_response: str


def evaluate(
    output_under_test: str,
    context: JudgeContext,
    rubric: Rubric,
    gateway: Gateway,
    *,
    judge_model_id: str = "mock-1",
) -> EvaluationOutcome:
    """Score one output against one rubric; retries an unparseable answer once."""
    system_text, user_text = build_judge_prompt(rubric, context, output_under_test)
    request = CompletionRequest(
        system_text=system_text,
        user_text=user_text,
        media=context.attachments,
        temperature=JUDGE_TEMPERATURE,
        model_id=judge_model_id,
    )
    result = gateway.complete(request)
    parsed = parse_judge_response(result.text)
    if parsed is None:
        retry = CompletionRequest(
            system_text=system_text,
            user_text=user_text + "\n\nReminder: the first line of your answer must be Score: <integer>.",
            media=context.attachments,
            temperature=JUDGE_TEMPERATURE,
            model_id=judge_model_id,
        )
        result = gateway.complete(retry)
        parsed = parse_judge_response(result.text)
        if parsed is None:
            raise EvaluationFailed(
                f"judge output for {rubric.task.value}/{rubric.criterion.value} stayed unparseable"
            )
    if parsed.clamped:
        logger.warning("judge score clamped into [0, 100] for %s/%s", rubric.task.value, rubric.criterion.value)
    if parsed.awarded or parsed.penalties:
        expected = itemized_total(parsed.awarded, parsed.penalties)
        if abs(expected - parsed.score) > 0.5:
            logger.warning(
                "judge itemization sums to %.1f but Score line says %d", expected, parsed.score
            )
    return EvaluationOutcome(
        criterion=rubric.criterion,
        score=float(parsed.score),
        rationale=parsed.rationale,
        clamped=parsed.clamped,
        raw_response=result.text,
    )


@dataclass
class JudgeVerdict:
    """Scores for one output across the three criteria, plus the metadata
    the aggregation tables group by."""

    task: JudgeTask
    model_id: str
    mode: str | None = None
    language: str | None = None
    scores: dict[Criterion, float] = field(default_factory=dict)
    rationales: dict[Criterion, str] = field(default_factory=dict)
    raw_response: str = ""
    failed: tuple[Criterion, ...] = ()


def evaluate_all(
    output_under_test: str,
    context: JudgeContext,
    rubrics: dict[tuple[JudgeTask, Criterion], Rubric],
    task: JudgeTask,
    gateway: Gateway,
    *,
    model_id: str,
    mode: str | None = None,
    judge_model_id: str = "mock-1",
) -> JudgeVerdict:
    """All three criteria for one output; failures are recorded, not raised."""
    verdict = JudgeVerdict(task=task, model_id=model_id, mode=mode, language=context.language)
    raws: list[str] = []
    failed: list[Criterion] = []
    for criterion in Criterion:
        rubric = rubrics.get((task, criterion))
        if rubric is None:
            raise RubricError(f"no rubric for {task.value}/{criterion.value}")
        try:
            outcome = evaluate(output_under_test, context, rubric, gateway, judge_model_id=judge_model_id)
        except EvaluationFailed as exc:
            logger.error("%s", exc)
            failed.append(criterion)
            raws.append(f"[{criterion.value}] EvaluationFailed")
            continue
        verdict.scores[criterion] = outcome.score
        verdict.rationales[criterion] = outcome.rationale
        raws.append(f"[{criterion.value}]\n{outcome.raw_response}")
    verdict.raw_response = "\n---\n".join(raws)
    verdict.failed = tuple(failed)
    return verdict


def verdict_to_scores(verdict: JudgeVerdict, judge_model_id: str) -> tuple[EvaluationScore, ...]:
    return tuple(
        EvaluationScore(
            task=verdict.task,
            criterion=criterion,
            score=verdict.scores[criterion],
            rationale=verdict.rationales.get(criterion, ""),
            judge_model_id=judge_model_id,
        )
        for criterion in Criterion
        if criterion in verdict.scores
    )


# --- aggregation ----------------------------------------------------------------

GROUP_FIELDS = ("model_id", "task", "mode", "language")


@dataclass(frozen=True)
class ScoreCell:
    mean: float
    n: int
    n_failed: int = 0


@dataclass(frozen=True)
class ScoreRow:
    key: tuple[str, ...]
    cells: dict[Criterion, ScoreCell]


@dataclass(frozen=True)
class ScoreTable:
    group_by: tuple[str, ...]
    rows: tuple[ScoreRow, ...]


def _group_key(verdict: JudgeVerdict, group_by: tuple[str, ...]) -> tuple[str, ...]:
    parts = []
    for name in group_by:
        if name == "task":
            parts.append(verdict.task.value)
        else:
            value = getattr(verdict, name)
            parts.append("" if value is None else str(value))
    return tuple(parts)


def aggregate_scores(
    verdicts: list[JudgeVerdict], group_by: tuple[str, ...] = ("model_id", "task", "mode")
) -> ScoreTable:
    """Mean score per group and criterion, rounded to 2 decimals.

    Insensitive to input order; groups sort by key. Failed criteria count
    into n_failed and stay out of the mean.
    """
    for name in group_by:
        if name not in GROUP_FIELDS:
            raise ValueError(f"cannot group by {name!r}")
    buckets: dict[tuple[str, ...], list[JudgeVerdict]] = {}
    for verdict in verdicts:
        buckets.setdefault(_group_key(verdict, group_by), []).append(verdict)
    rows: list[ScoreRow] = []
    for key in sorted(buckets):
        cells: dict[Criterion, ScoreCell] = {}
        for criterion in Criterion:
            values = [v.scores[criterion] for v in buckets[key] if criterion in v.scores]
            n_failed = sum(1 for v in buckets[key] if criterion in v.failed)
            if values:
                cells[criterion] = ScoreCell(
                    mean=round(sum(values) / len(values), 2), n=len(values), n_failed=n_failed
                )
            else:
                cells[criterion] = ScoreCell(mean=float("nan"), n=0, n_failed=n_failed)
        rows.append(ScoreRow(key=key, cells=cells))
    return ScoreTable(group_by=group_by, rows=tuple(rows))


def score_table_csv(table: ScoreTable) -> str:
    header = list(table.group_by) + [c.value for c in Criterion] + ["n"]
    lines = [",".join(header)]
    for row in table.rows:
        n = max((cell.n for cell in row.cells.values()), default=0)
        values = []
        for criterion in Criterion:
            cell = row.cells[criterion]
            values.append("" if cell.n == 0 else f"{cell.mean:.2f}")
        lines.append(",".join(list(row.key) + values + [str(n)]))
    return "\n".join(lines) + "\n"


def score_table_text(table: ScoreTable) -> str:
    header = list(table.group_by) + [c.value for c in Criterion]
    widths = [max(len(h), 12) for h in header]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for row in table.rows:
        cells = []
        for criterion in Criterion:
            cell = row.cells[criterion]
            cells.append("-" if cell.n == 0 else f"{cell.mean:.2f}")
        columns = list(row.key) + cells
        out.append("  ".join(str(c).ljust(w) for c, w in zip(columns, widths)))
    return "\n".join(out) + "\n"
