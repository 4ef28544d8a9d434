"""Distribution tables and charts over a finished dataset."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .judge import JudgeVerdict, ScoreTable, aggregate_scores, score_table_csv, score_table_text
from .records import ClaimRecord, ContentType, EvidenceCategory, VerdictLabel

logger = logging.getLogger(__name__)

VERDICT_COLUMNS = tuple(v.value for v in VerdictLabel)
CONTENT_COLUMNS = tuple(c.value for c in ContentType)
CATEGORY_COLUMNS = tuple(c.value for c in EvidenceCategory)


def pct(count: int, total: int) -> float:
    return round(100.0 * count / total, 2) if total else 0.0


@dataclass(frozen=True)
class DistributionRow:
    key: str
    cells: dict[str, float]
    n: int


@dataclass(frozen=True)
class DistributionTable:
    name: str
    key_label: str
    columns: tuple[str, ...]
    rows: tuple[DistributionRow, ...]
    total: int


def publisher_verdict_distribution(records: Sequence[ClaimRecord]) -> DistributionTable:
    """Cells are percentages of the whole dataset; rows sort by share, desc."""
    counts: dict[str, dict[str, int]] = {}
    for record in records:
        row = counts.setdefault(record.publisher, {col: 0 for col in VERDICT_COLUMNS})
        row[record.verdict.value] += 1
    total = len(records)
    rows = []
    for publisher, row_counts in counts.items():
        n = sum(row_counts.values())
        rows.append(
            DistributionRow(
                key=publisher,
                cells={col: pct(row_counts[col], total) for col in VERDICT_COLUMNS},
                n=n,
            )
        )
    rows.sort(key=lambda r: (-r.n, r.key))
    return DistributionTable(
        name="publisher_verdict",
        key_label="publisher",
        columns=VERDICT_COLUMNS,
        rows=tuple(rows),
        total=total,
    )


def content_type_distribution(records: Sequence[ClaimRecord]) -> DistributionTable:
    """One row per language; cells are shares of that language's categorized records."""
    by_language: dict[str, dict[str, int]] = {}
    for record in records:
        if record.content_type is None:
            continue
        row = by_language.setdefault(record.language, {col: 0 for col in CONTENT_COLUMNS})
        row[record.content_type.value] += 1
    rows = []
    for language in sorted(by_language):
        row_counts = by_language[language]
        n = sum(row_counts.values())
        rows.append(
            DistributionRow(
                key=language,
                cells={col: pct(row_counts[col], n) for col in CONTENT_COLUMNS},
                n=n,
            )
        )
    return DistributionTable(
        name="content_types",
        key_label="language",
        columns=CONTENT_COLUMNS,
        rows=tuple(rows),
        total=sum(r.n for r in rows),
    )


def evidence_category_distribution(records: Sequence[ClaimRecord], group_by: str = "publisher") -> DistributionTable:
    """Shares of evidence items per category within each group.

    Groups present in the dataset but without any evidence items keep a row
    of zeros rather than disappearing.
    """
    if group_by not in ("publisher", "verdict"):
        raise ValueError(f"group_by must be publisher or verdict, got {group_by!r}")
    counts: dict[str, dict[str, int]] = {}
    for record in records:
        key = record.publisher if group_by == "publisher" else record.verdict.value
        row = counts.setdefault(key, {col: 0 for col in CATEGORY_COLUMNS})
        if record.evidence:
            for item in record.evidence.items:
                row[item.category.value] += 1
    rows = []
    for key in sorted(counts):
        row_counts = counts[key]
        n = sum(row_counts.values())
        rows.append(
            DistributionRow(
                key=key,
                cells={col: pct(row_counts[col], n) for col in CATEGORY_COLUMNS},
                n=n,
            )
        )
    rows.sort(key=lambda r: (-r.n, r.key))
    return DistributionTable(
        name=f"evidence_by_{group_by}",
        key_label=group_by,
        columns=CATEGORY_COLUMNS,
        rows=tuple(rows),
        total=sum(r.n for r in rows),
    )


def distribution_csv(table: DistributionTable) -> str:
    lines = [",".join([table.key_label, *table.columns, "n"])]
    for row in table.rows:
        cells = [f"{row.cells[col]:.2f}" for col in table.columns]
        lines.append(",".join([row.key, *cells, str(row.n)]))
    return "\n".join(lines) + "\n"


def plot_distribution(table: DistributionTable, path: str | Path) -> None:
    """Grouped bar chart, one bar group per row."""
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(table.rows) + 2), 4.5))
    positions = range(len(table.rows))
    width = max(0.8 / max(len(table.columns), 1), 0.08)
    for ci, column in enumerate(table.columns):
        values = [row.cells[column] for row in table.rows]
        offsets = [p + ci * width for p in positions]
        ax.bar(offsets, values, width=width, label=column)
    ax.set_xticks([p + width * (len(table.columns) - 1) / 2 for p in positions])
    ax.set_xticklabels([row.key for row in table.rows], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("%")
    ax.set_title(table.name)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_report_bundle(
    records: Sequence[ClaimRecord],
    out_dir: str | Path,
    *,
    verdicts: Iterable[JudgeVerdict] | None = None,
    score_group_by: tuple[str, ...] = ("model_id", "task", "mode", "language"),
) -> list[Path]:
    """Write every distribution as CSV plus chart; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    tables = [
        publisher_verdict_distribution(records),
        content_type_distribution(records),
        evidence_category_distribution(records, group_by="publisher"),
        evidence_category_distribution(records, group_by="verdict"),
    ]
    for table in tables:
        csv_path = out_dir / f"{table.name}.csv"
        csv_path.write_text(distribution_csv(table), encoding="utf-8")
        written.append(csv_path)
        png_path = out_dir / f"{table.name}.png"
        plot_distribution(table, png_path)
        written.append(png_path)
    verdict_list = list(verdicts) if verdicts is not None else []
    if verdict_list:
        score_table: ScoreTable = aggregate_scores(verdict_list, group_by=score_group_by)
        csv_path = out_dir / "scores.csv"
        csv_path.write_text(score_table_csv(score_table), encoding="utf-8")
        written.append(csv_path)
        txt_path = out_dir / "scores.txt"
        txt_path.write_text(score_table_text(score_table), encoding="utf-8")
        written.append(txt_path)
    logger.info("report bundle: %d files in %s", len(written), out_dir)
    return written
