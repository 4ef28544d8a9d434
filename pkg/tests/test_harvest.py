"""Claims API client: pagination, dedup, retry behaviour, sinks."""

import json

import pytest

from factpipe.harvest import (
    FixtureTransport,
    HarvestQuery,
    HttpTransport,
    JsonlSink,
    RawClaimReview,
    SchemaError,
    fetch_page,
    harvest,
    raw_from_jsonable,
    raw_to_jsonable,
)
from factpipe.net import AuthError, RateLimited, RetryPolicy, TransportError


def make_raw(i, language="fr", url=None):
    return RawClaimReview(
        claim_text=f"claim number {i}",
        publisher_name="Checker",
        publisher_site="checker.example",
        review_url=url or f"https://checker.example/{i}",
        review_title=f"review {i}",
        original_rating="Faux",
        language=language,
    )


def claim_json(i, language="fr", url=None):
    return {
        "text": f"claim number {i}",
        "claimant": "someone",
        "claimDate": "2023-05-01T00:00:00Z",
        "claimReview": [
            {
                "publisher": {"name": "Checker", "site": "checker.example"},
                "url": url or f"https://checker.example/{i}",
                "title": f"review {i}",
                "textualRating": "Faux",
                "languageCode": language,
                "reviewDate": "2023-05-02T00:00:00Z",
            }
        ],
    }


def page_body(claims, token=None):
    payload = {"claims": claims}
    if token:
        payload["nextPageToken"] = token
    return json.dumps(payload).encode("utf-8")


class ScriptedTransport:
    """Yields queued (status, headers, body) per call and records params."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get_page(self, query, page_token, api_key):
        self.calls.append((query.language, page_token, api_key))
        return self.responses.pop(0)


# --- query validation ----------------------------------------------------------


def test_query_rejects_bad_inputs():
    with pytest.raises(ValueError):
        HarvestQuery(language="en")
    with pytest.raises(ValueError):
        HarvestQuery(language="fr", page_size=0)
    with pytest.raises(ValueError):
        HarvestQuery(language="fr", page_size=101)
    with pytest.raises(ValueError):
        HarvestQuery(language="fr", max_age_days=0)
    assert HarvestQuery(language="de", page_size=100).page_size == 100


# --- fetch_page ------------------------------------------------------------------


def test_fetch_page_flattens_multiple_reviews_per_claim():
    claim = claim_json(1)
    claim["claimReview"].append(
        {
            "publisher": {"name": "Other", "site": "other.example"},
            "url": "https://other.example/1",
            "textualRating": "Falsch",
        }
    )
    transport = ScriptedTransport([(200, {}, page_body([claim]))])
    page = fetch_page(HarvestQuery(language="fr"), None, transport)
    assert len(page.claims) == 2
    assert page.claims[0].review_url == "https://checker.example/1"
    assert page.claims[1].publisher_site == "other.example"
    # languageCode missing on the second review: falls back to the query language
    assert page.claims[1].language == "fr"


def test_fetch_page_counts_malformed_entries():
    claims = [
        claim_json(1),
        "not a dict",
        {"text": "claim without reviews"},  # defaults to empty list, zero reviews
        {"claimReview": [{"url": "https://x", "textualRating": "Faux"}]},  # no text
        {
            "text": "claim with broken review",
            "claimReview": [{"url": "https://x"}],  # review missing rating
        },
    ]
    transport = ScriptedTransport([(200, {}, page_body(claims))])
    page = fetch_page(HarvestQuery(language="fr"), None, transport)
    assert len(page.claims) == 1
    assert page.skipped_malformed == 3


def test_fetch_page_maps_status_codes():
    query = HarvestQuery(language="fr")
    with pytest.raises(AuthError):
        fetch_page(query, None, ScriptedTransport([(403, {}, b"")]))
    with pytest.raises(RateLimited) as rl:
        fetch_page(query, None, ScriptedTransport([(429, {"Retry-After": "2"}, b"")]))
    assert rl.value.retry_after_s == 2.0
    with pytest.raises(TransportError):
        fetch_page(query, None, ScriptedTransport([(500, {}, b"")]))
    with pytest.raises(SchemaError):
        fetch_page(query, None, ScriptedTransport([(200, {}, b"not json")]))
    with pytest.raises(SchemaError):
        fetch_page(query, None, ScriptedTransport([(200, {}, b"[1, 2]")]))


def test_fetch_page_empty_page_is_fine():
    transport = ScriptedTransport([(200, {}, b"{}")])
    page = fetch_page(HarvestQuery(language="fr"), None, transport)
    assert page.claims == ()
    assert page.next_page_token is None


# --- pagination arithmetic --------------------------------------------------------


def paged_transport(total, page_size, language="fr"):
    """Synthesizes ceil(total/page_size) pages of distinct claims."""
    responses = []
    i = 0
    page_no = 0
    while i < total:
        batch = [claim_json(j, language=language) for j in range(i, min(i + page_size, total))]
        i += len(batch)
        page_no += 1
        token = f"t{page_no + 1}" if i < total else None
        responses.append((200, {}, page_body(batch, token=token)))
    return ScriptedTransport(responses)


def test_250_claims_at_page_size_100_takes_three_calls():
    transport = paged_transport(250, 100)
    collected = []
    manifest = harvest(
        [HarvestQuery(language="fr", page_size=100)],
        collected.append,
        transport=transport,
        sleep=lambda s: None,
    )
    assert len(transport.calls) == 3
    assert manifest.pages_fetched == 3
    assert manifest.written == 250
    assert len(collected) == 250
    # page tokens threaded through in order
    assert [tok for _, tok, _ in transport.calls] == [None, "t2", "t3"]


def test_injected_429_is_retried_without_changing_totals():
    transport = paged_transport(250, 100)
    # wedge a 429 in front of the second page
    transport.responses.insert(1, (429, {"Retry-After": "1"}, b""))
    sleeps = []
    collected = []
    manifest = harvest(
        [HarvestQuery(language="fr", page_size=100)],
        collected.append,
        transport=transport,
        sleep=sleeps.append,
    )
    assert len(transport.calls) == 4  # one extra transport call for the retry
    assert manifest.pages_fetched == 3  # but the same number of successful pages
    assert manifest.written == 250
    assert len(collected) == 250
    assert sleeps == [1.0]


def test_persistent_failure_recorded_per_query_and_others_continue():
    bad = ScriptedTransport([(500, {}, b"")] * 5 + [(200, {}, page_body([claim_json(1, language="de")]))])
    collected = []
    manifest = harvest(
        [HarvestQuery(language="fr"), HarvestQuery(language="de")],
        collected.append,
        transport=bad,
        policy=RetryPolicy(max_attempts=5),
        sleep=lambda s: None,
    )
    assert len(manifest.failed_queries) == 1
    assert "language=fr" in manifest.failed_queries[0]
    assert manifest.written == 1
    assert collected[0].language == "de"


def test_auth_error_aborts_whole_harvest():
    transport = ScriptedTransport([(401, {}, b"")])
    with pytest.raises(AuthError):
        harvest([HarvestQuery(language="fr")], lambda raw: None, transport=transport, sleep=lambda s: None)


def test_repeated_page_token_aborts_query():
    looping = ScriptedTransport(
        [
            (200, {}, page_body([claim_json(1)], token="loop")),
            (200, {}, page_body([claim_json(2)], token="loop")),
        ]
    )
    manifest = harvest(
        [HarvestQuery(language="fr")], lambda raw: None, transport=looping, sleep=lambda s: None
    )
    assert len(looping.calls) == 2
    assert manifest.failed_queries and "repeated" in manifest.failed_queries[0]


def test_duplicates_within_and_across_queries_are_dropped():
    same = claim_json(1)
    transport = ScriptedTransport(
        [
            (200, {}, page_body([same, claim_json(2)], token="t2")),
            (200, {}, page_body([same])),
            (200, {}, page_body([claim_json(1, language="de")])),  # same url+text again
        ]
    )
    collected = []
    seen = set()
    manifest = harvest(
        [HarvestQuery(language="fr"), HarvestQuery(language="de")],
        collected.append,
        transport=transport,
        sleep=lambda s: None,
        seen=seen,
    )
    assert manifest.fetched == 4
    assert manifest.written == 2
    assert manifest.deduped == 2
    assert len(seen) == 2


def test_seen_set_makes_second_run_idempotent():
    collected = []
    seen = set()
    for _ in range(2):
        harvest(
            [HarvestQuery(language="fr")],
            collected.append,
            transport=ScriptedTransport([(200, {}, page_body([claim_json(1)]))]),
            sleep=lambda s: None,
            seen=seen,
        )
    assert len(collected) == 1


# --- transports -------------------------------------------------------------------


class ParamRecorder:
    def __init__(self):
        self.params = None

    def get(self, url, params=None, timeout=None):
        self.params = params

        class R:
            status_code = 200
            headers = {}
            content = b"{}"

        return R()


def test_http_transport_builds_query_params():
    session = ParamRecorder()
    transport = HttpTransport("https://api.example/claims:search", session=session)
    query = HarvestQuery(language="de", publisher_site="correctiv.org", max_age_days=30, page_size=75)
    transport.get_page(query, "tok123", "sekret")
    assert session.params == {
        "languageCode": "de",
        "pageSize": 75,
        "reviewPublisherSiteFilter": "correctiv.org",
        "maxAgeDays": 30,
        "pageToken": "tok123",
        "key": "sekret",
    }


def test_http_transport_omits_unset_params():
    session = ParamRecorder()
    transport = HttpTransport("https://api.example/claims:search", session=session)
    transport.get_page(HarvestQuery(language="fr"), None, None)
    assert session.params == {"languageCode": "fr", "pageSize": 50}


def test_fixture_transport_serves_recorded_pages(fixtures_root):
    transport = FixtureTransport(fixtures_root / "api")
    query = HarvestQuery(language="fr", page_size=100)
    page = fetch_page(query, None, transport)
    assert page.claims
    assert page.next_page_token == "fr-page2"
    page2 = fetch_page(query, page.next_page_token, transport)
    assert page2.next_page_token is None
    assert transport.calls == 2


def test_fixture_transport_missing_page_is_transport_error(tmp_path):
    transport = FixtureTransport(tmp_path)
    with pytest.raises(TransportError):
        fetch_page(HarvestQuery(language="fr"), None, transport)


# --- sink and serialization --------------------------------------------------------


def test_raw_jsonable_round_trip():
    raw = make_raw(7, language="de")
    assert raw_from_jsonable(raw_to_jsonable(raw)) == raw


def test_jsonl_sink_appends_and_reloads_keys(tmp_path):
    path = tmp_path / "raw.jsonl"
    sink = JsonlSink(path)
    sink(make_raw(1))
    sink(make_raw(2))
    assert sink.count == 2
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["claim_text"] == "claim number 1"
    keys = JsonlSink(path).existing_keys()
    assert ("https://checker.example/1", "claim number 1") in keys
    assert len(keys) == 2
