import json

import pytest
from hypothesis import given, strategies as st

from factpipe.records import (
    ArticleContent,
    ClaimRecord,
    ContentType,
    Criterion,
    EvaluationScore,
    EvidenceCategory,
    EvidenceItem,
    EvidenceSet,
    ImageRef,
    JudgeTask,
    Justification,
    JustificationMode,
    RecordDecodeError,
    SourceLocator,
    VerdictLabel,
    VideoRef,
    dumps_record,
    loads_record,
    normalize_ws,
    record_from_jsonable,
    record_id,
    to_jsonable,
    validate_record,
)
from tests.conftest import make_article, make_record


def codes(violations):
    return [v.code for v in violations]


# --- enum wire values ----------------------------------------------------------

def test_verdict_serialized_values():
    assert VerdictLabel.TRUE.value == "TRUE"
    assert VerdictLabel.FALSE.value == "FALSE"
    assert VerdictLabel.PARTIALLY_TRUE.value == "partially-true"
    assert VerdictLabel.OTHER.value == "other"


def test_category_and_mode_values():
    assert [c.value for c in EvidenceCategory] == [
        "ExpertTestimony",
        "QuantitativeData",
        "OfficialRecords",
        "MediaRecord",
        "MultimediaEvidence",
        "EyewitnessAccount",
    ]
    assert [m.value for m in JustificationMode] == ["TextOnly", "Multimodal"]
    assert [t.value for t in JudgeTask] == ["EvidenceExtraction", "JustificationGeneration"]
    assert [c.value for c in Criterion] == ["coherence", "correctness", "completeness"]
    assert [c.value for c in ContentType] == ["Text", "Image", "Video", "Statistic"]


# --- identity and normalization ---------------------------------------------------

def test_record_id_frozen_oracle():
    # sha256(review_url + "\n" + claim_text), hex; both digests precomputed
    assert (
        record_id(
            "https://factuel.afp.com/doc.afp.com.34FJ2KL",
            "Une vidéo montre des stations-service totalement à sec dans tout Paris en mai 2023",
        )
        == "2eeea10ed85108158a91754870a29577444f2f2b48389b0f57d069ba12a1cc89"
    )
    assert record_id("https://example.org/check", "a claim") == (
        "0e52d418ab0d059379128e661fc8c66ddd329af500fb56048e4c3c97afb78b5f"
    )


def test_normalize_ws():
    assert normalize_ws("  a\t b\n\nc  ") == "a b c"
    assert normalize_ws("déjà  vu") == "déjà vu"


@given(st.text(max_size=200))
def test_normalize_ws_idempotent(s):
    assert normalize_ws(normalize_ws(s)) == normalize_ws(s)


# --- locators ---------------------------------------------------------------------

def test_locator_kinds():
    SourceLocator(kind="paragraph", paragraph_index=0)
    SourceLocator(kind="image", media_id="IMG1")
    SourceLocator(kind="video_frame", media_id="VID2", timestamp_s=4.0)
    with pytest.raises(ValueError):
        SourceLocator(kind="paragraph")  # missing index
    with pytest.raises(ValueError):
        SourceLocator(kind="video_frame", media_id="VID1")  # missing timestamp
    with pytest.raises(ValueError):
        SourceLocator(kind="chapter", paragraph_index=1)


# --- validation codes -------------------------------------------------------------

def test_validate_clean_record():
    record = make_record()
    assert validate_record(record) == []


def test_validate_id_mismatch():
    record = make_record()
    bad = ClaimRecord(**{**record.__dict__, "id": "0" * 64})
    assert "id-mismatch" in codes(validate_record(bad))


def test_validate_language_and_text():
    record = make_record(language="en")
    assert "language-not-supported" in codes(validate_record(record))
    record = make_record(claim_text="   ")
    assert "claim-text-empty" in codes(validate_record(record))


def test_validate_urls_and_date():
    record = make_record(review_url="not-a-url")
    assert "review-url-not-absolute" in codes(validate_record(record))
    record = make_record(claim_date="pas une date")
    assert "claim-date-not-iso" in codes(validate_record(record))
    assert validate_record(make_record(claim_date="2023-05-11")) == []
    assert validate_record(make_record(claim_date="2023-05-11T00:00:00Z")) == []


def test_validate_article_media_ids():
    article = make_article(
        images=(ImageRef(id="IMG2", src_url="https://e.org/x.jpg"),),  # must start at IMG1
    )
    record = make_record(article=article)
    assert "media-id-not-canonical" in codes(validate_record(record))

    article = make_article(videos=(VideoRef(id="VID1", src_url="https://e.org/v.mp4", duration_s=-2.0),))
    record = make_record(article=article)
    assert "video-duration-invalid" in codes(validate_record(record))


def test_validate_evidence_codes():
    article = make_article(paragraphs=("Le rapport officiel est clair.",))
    good_item = EvidenceItem(
        category=EvidenceCategory.OFFICIAL_RECORDS,
        text="Le rapport officiel est clair.",
        locator=SourceLocator(kind="paragraph", paragraph_index=0),
        is_quote=True,
    )
    record = make_record(article=article)
    evidence = EvidenceSet(claim_id=record.id, items=(good_item,), model_id="m", template_version="t")
    record = make_record(article=article, evidence=evidence)
    assert validate_record(record) == []

    # evidence with no article at all
    bare = make_record(evidence=evidence)
    assert "evidence-without-article" in codes(validate_record(bare))

    # claim id mismatch
    other = EvidenceSet(claim_id="f" * 64, items=(good_item,), model_id="m", template_version="t")
    assert "evidence-claim-id-mismatch" in codes(validate_record(make_record(article=article, evidence=other)))

    # unresolved locator
    dangling = EvidenceItem(
        category=EvidenceCategory.OFFICIAL_RECORDS,
        text="Le rapport officiel est clair.",
        locator=SourceLocator(kind="paragraph", paragraph_index=7),
        is_quote=True,
    )
    ev = EvidenceSet(claim_id=record.id, items=(dangling,), model_id="m", template_version="t")
    assert "evidence-locator-unresolved" in codes(validate_record(make_record(article=article, evidence=ev)))

    # quote that is not contained in its paragraph
    fabricated = EvidenceItem(
        category=EvidenceCategory.OFFICIAL_RECORDS,
        text="Une phrase jamais écrite.",
        locator=SourceLocator(kind="paragraph", paragraph_index=0),
        is_quote=True,
    )
    ev = EvidenceSet(claim_id=record.id, items=(fabricated,), model_id="m", template_version="t")
    assert "evidence-quote-not-grounded" in codes(validate_record(make_record(article=article, evidence=ev)))


def test_validate_justification_codes():
    article = make_article()
    record = make_record(article=article)
    item = EvidenceItem(
        category=EvidenceCategory.EXPERT_TESTIMONY,
        text="First paragraph with facts.",
        locator=SourceLocator(kind="paragraph", paragraph_index=0),
        is_quote=True,
    )
    evidence = EvidenceSet(claim_id=record.id, items=(item,), model_id="m", template_version="t")
    just = Justification(
        mode=JustificationMode.TEXT_ONLY,
        text="Justification: solid.",
        evidence_refs=(0,),
        model_id="m",
        generated_at="2023-06-01T12:00:00+00:00",
    )
    record = make_record(article=article, evidence=evidence, justifications=(just,))
    assert validate_record(record) == []

    out_of_range = Justification(
        mode=JustificationMode.TEXT_ONLY,
        text="Justification: solid.",
        evidence_refs=(4,),
        model_id="m",
        generated_at="2023-06-01T12:00:00+00:00",
    )
    record = make_record(article=article, evidence=evidence, justifications=(out_of_range,))
    assert "justification-ref-out-of-range" in codes(validate_record(record))

    orphan = make_record(article=article, justifications=(just,))
    assert "justification-without-evidence" in codes(validate_record(orphan))


def test_validate_evaluation_range():
    score = EvaluationScore(
        task=JudgeTask.EVIDENCE_EXTRACTION,
        criterion=Criterion.COHERENCE,
        score=140.0,
        rationale="r",
        judge_model_id="j",
    )
    record = make_record(evaluations=(score,))
    assert "evaluation-score-out-of-range" in codes(validate_record(record))


# --- json round trip ---------------------------------------------------------------

def test_jsonable_key_order_is_stable():
    record = make_record()
    keys = list(to_jsonable(record).keys())
    assert keys == [
        "id",
        "language",
        "claim_text",
        "claimant",
        "claim_date",
        "publisher",
        "review_url",
        "review_title",
        "original_rating",
        "verdict",
        "content_type",
        "article",
        "evidence",
        "justifications",
        "evaluations",
    ]


def test_dumps_loads_round_trip(article_with_media):
    record = make_record(article=article_with_media, content_type=ContentType.VIDEO)
    item = EvidenceItem(
        category=EvidenceCategory.MULTIMEDIA_EVIDENCE,
        text="the opening of the footage",
        locator=SourceLocator(kind="video_frame", media_id="VID1", timestamp_s=4.0),
        is_quote=False,
        media_ref="VID1",
    )
    evidence = EvidenceSet(claim_id=record.id, items=(item,), model_id="m", template_version="t")
    just = Justification(
        mode=JustificationMode.MULTIMODAL,
        text="Justification: the frame at 00:04 shows it.",
        evidence_refs=(0,),
        model_id="m",
        generated_at="2023-06-01T12:00:00+00:00",
    )
    score = EvaluationScore(
        task=JudgeTask.JUSTIFICATION_GENERATION,
        criterion=Criterion.CORRECTNESS,
        score=88.0,
        rationale="fine",
        judge_model_id="judge-1",
    )
    record = make_record(
        article=article_with_media,
        content_type=ContentType.VIDEO,
        evidence=evidence,
        justifications=(just,),
        evaluations=(score,),
    )
    line = dumps_record(record)
    assert "\n" not in line
    assert loads_record(line) == record
    # compact separators, no ascii escaping
    assert '", "' not in line
    assert "vidéo" in dumps_record(make_record(claim_text="la vidéo truquée", review_url="https://e.org/v"))


def test_loads_record_rejects_garbage():
    with pytest.raises(RecordDecodeError):
        loads_record("{not json")
    with pytest.raises(RecordDecodeError):
        loads_record(json.dumps({"id": "x"}))


@given(
    claim=st.text(min_size=1, max_size=80).filter(lambda s: s.strip()),
    lang=st.sampled_from(["fr", "de"]),
    verdict=st.sampled_from(list(VerdictLabel)),
)
def test_round_trip_property(claim, lang, verdict):
    record = make_record(claim_text=claim, language=lang, verdict=verdict)
    assert record_from_jsonable(to_jsonable(record)) == record
