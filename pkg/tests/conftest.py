"""Shared builders for the test suite."""

from __future__ import annotations

from pathlib import Path

import pytest

from factpipe.records import (
    ArticleContent,
    ClaimRecord,
    ImageRef,
    VerdictLabel,
    VideoRef,
    record_id,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def make_article(
    paragraphs=("First paragraph with facts.", "Second paragraph, more detail."),
    images=(),
    videos=(),
    url="https://example.org/check",
) -> ArticleContent:
    return ArticleContent(
        url=url,
        paragraphs=tuple(paragraphs),
        images=tuple(images),
        videos=tuple(videos),
        fetched_at="2023-06-01T12:00:00+00:00",
    )


def make_record(
    claim_text="a claim",
    review_url="https://example.org/check",
    language="fr",
    verdict=VerdictLabel.FALSE,
    **kwargs,
) -> ClaimRecord:
    return ClaimRecord(
        id=record_id(review_url, claim_text),
        language=language,
        claim_text=claim_text,
        publisher=kwargs.pop("publisher", "example.org"),
        review_url=review_url,
        review_title=kwargs.pop("review_title", "A review"),
        original_rating=kwargs.pop("original_rating", "faux"),
        verdict=verdict,
        **kwargs,
    )


@pytest.fixture()
def article_with_media() -> ArticleContent:
    return make_article(
        paragraphs=(
            "La vidéo a été partagée sur Facebook des milliers de fois.",
            "Le professeur Durand explique que la séquence est sortie de son contexte.",
            "Selon les chiffres officiels, 12 % des foyers étaient concernés.",
        ),
        images=(ImageRef(id="IMG1", src_url="https://example.org/a.jpg", caption="une capture"),),
        videos=(VideoRef(id="VID1", src_url="https://example.org/v.mp4", duration_s=12.0),),
    )


@pytest.fixture(scope="session")
def fixtures_root() -> Path:
    assert FIXTURES.is_dir(), "fixture corpus missing; run scripts/make_fixtures.py"
    return FIXTURES


# --- synthetic datasets built to land on published aggregate values -----------


def synth_publisher_false_records(publisher: str, false_count: int, total: int, language: str):
    """total records of which false_count are (publisher, FALSE); remainder
    spreads over a second publisher and the other labels."""
    labels = [VerdictLabel.TRUE, VerdictLabel.PARTIALLY_TRUE, VerdictLabel.OTHER]
    records = []
    for i in range(false_count):
        records.append(
            make_record(
                claim_text=f"claim {publisher} {i}",
                review_url=f"https://{publisher}/claims/{i}",
                language=language,
                publisher=publisher,
                verdict=VerdictLabel.FALSE,
            )
        )
    for i in range(total - false_count):
        records.append(
            make_record(
                claim_text=f"filler claim {i}",
                review_url=f"https://other-checker.example/claims/{i}",
                language=language,
                publisher="other-checker.example",
                verdict=labels[i % len(labels)],
            )
        )
    return records


def synth_factuel_false_records():
    """FR set where factuel.afp.com holds a 39.75% FALSE share: 159 of 400."""
    return synth_publisher_false_records("factuel.afp.com", 159, 400, "fr")


def synth_dpa_false_records():
    """DE set where dpa-factchecking.com holds a 27.71% FALSE share: 23 of 83."""
    return synth_publisher_false_records("dpa-factchecking.com", 23, 83, "de")


def synth_typed_fr_records():
    """FR set with content types Text/Image/Video/Statistic = 74.6/9/8.4/8 percent."""
    from factpipe.records import ContentType

    mix = [
        (ContentType.TEXT, 373),
        (ContentType.IMAGE, 45),
        (ContentType.VIDEO, 42),
        (ContentType.STATISTIC, 40),
    ]
    records = []
    i = 0
    for content_type, count in mix:
        for _ in range(count):
            records.append(
                make_record(
                    claim_text=f"typed claim {i}",
                    review_url=f"https://typed.example/claims/{i}",
                    language="fr",
                    content_type=content_type,
                )
            )
            i += 1
    return records


def synth_fr_judge_verdicts():
    """Three justification verdicts whose means land on 80.79/82.20/81.60."""
    from factpipe.judge import JudgeVerdict
    from factpipe.records import Criterion, JudgeTask

    rows = [(75.37, 80.6, 81.8), (82.0, 82.0, 80.0), (85.0, 84.0, 83.0)]
    return [
        JudgeVerdict(
            task=JudgeTask.JUSTIFICATION_GENERATION,
            model_id="gemini-like-1",
            mode="TextOnly",
            language="fr",
            scores={
                Criterion.COHERENCE: coh,
                Criterion.CORRECTNESS: cor,
                Criterion.COMPLETENESS: com,
            },
        )
        for coh, cor, com in rows
    ]
