import random
import string

import pytest
from hypothesis import given, settings, strategies as st

from factpipe.assets import default_mapping_table_path
from factpipe.ratings import (
    MappingError,
    MappingTable,
    Provenance,
    canonical_rating,
    load_mapping_table,
    normalize_rating,
)
from factpipe.records import VerdictLabel


@pytest.fixture(scope="module")
def table() -> MappingTable:
    return load_mapping_table(default_mapping_table_path())


# Golden suite: raw publisher strings as they appear in the wild, with
# messy casing and spacing. Every one must resolve without the fallback.
GOLDEN = [
    # factuel.afp.com
    ("factuel.afp.com", "Faux", VerdictLabel.FALSE),
    ("factuel.afp.com", "FAUX", VerdictLabel.FALSE),
    ("factuel.afp.com", "  faux  ", VerdictLabel.FALSE),
    ("factuel.afp.com", "Vrai", VerdictLabel.TRUE),
    ("factuel.afp.com", "Trompeur", VerdictLabel.PARTIALLY_TRUE),
    ("factuel.afp.com", "Infondé", VerdictLabel.FALSE),
    ("factuel.afp.com", "Détourné", VerdictLabel.FALSE),
    ("factuel.afp.com", "Vidéo détournée", VerdictLabel.FALSE),
    ("factuel.afp.com", "Photo détournée", VerdictLabel.FALSE),
    ("factuel.afp.com", "Manque de contexte", VerdictLabel.PARTIALLY_TRUE),
    ("factuel.afp.com", "Mélangé", VerdictLabel.PARTIALLY_TRUE),
    ("factuel.afp.com", "Non prouvé", VerdictLabel.OTHER),
    ("factuel.afp.com", "Faux : la photo date de 2015", VerdictLabel.FALSE),
    # faktencheck.afp.com
    ("faktencheck.afp.com", "Falsch", VerdictLabel.FALSE),
    ("faktencheck.afp.com", "Irreführend", VerdictLabel.PARTIALLY_TRUE),
    ("faktencheck.afp.com", "Fehlender Kontext", VerdictLabel.PARTIALLY_TRUE),
    ("faktencheck.afp.com", "Manipuliert", VerdictLabel.FALSE),
    ("faktencheck.afp.com", "Falsch: Video aus 2019", VerdictLabel.FALSE),
    # correctiv.org
    ("correctiv.org", "Falsch", VerdictLabel.FALSE),
    ("correctiv.org", "Richtig", VerdictLabel.TRUE),
    ("correctiv.org", "Teilweise falsch", VerdictLabel.PARTIALLY_TRUE),
    ("correctiv.org", "teilweise   falsch", VerdictLabel.PARTIALLY_TRUE),
    ("correctiv.org", "Größtenteils falsch", VerdictLabel.FALSE),
    ("correctiv.org", "Größtenteils richtig", VerdictLabel.PARTIALLY_TRUE),
    ("correctiv.org", "Unbelegt", VerdictLabel.OTHER),
    ("correctiv.org", "Falscher Kontext", VerdictLabel.FALSE),
    # dpa-factchecking.com
    ("dpa-factchecking.com", "Falsch", VerdictLabel.FALSE),
    ("dpa-factchecking.com", "Richtig", VerdictLabel.TRUE),
    ("dpa-factchecking.com", "Irreführend", VerdictLabel.PARTIALLY_TRUE),
    ("dpa-factchecking.com", "Frei erfunden", VerdictLabel.FALSE),
    ("dpa-factchecking.com", "Nicht belegt", VerdictLabel.OTHER),
    # global French, via publishers without dedicated rows
    ("20minutes.fr", "Intox", VerdictLabel.FALSE),
    ("20minutes.fr", "C'est faux", VerdictLabel.FALSE),
    ("lemonde.fr", "Plutôt vrai", VerdictLabel.PARTIALLY_TRUE),
    ("lemonde.fr", "Plutôt faux", VerdictLabel.FALSE),
    ("francetvinfo.fr", "Non vérifiable", VerdictLabel.OTHER),
    ("liberation.fr", "Fake news", VerdictLabel.FALSE),
    ("liberation.fr", "Exagéré", VerdictLabel.PARTIALLY_TRUE),
    ("tf1info.fr", "Faux : la séquence date de 2018", VerdictLabel.FALSE),
    ("sciencefeedback.co", "Sans fondement", VerdictLabel.FALSE),
    # global German
    ("tagesschau.de", "Teilweise richtig", VerdictLabel.PARTIALLY_TRUE),
    ("presseportal.de", "Falschmeldung", VerdictLabel.FALSE),
    ("volksverpetzer.de", "Frei erfunden", VerdictLabel.FALSE),
    ("stern.de", "Richtig: die Zahlen stimmen", VerdictLabel.TRUE),
    ("apa.at", "Stimmt nicht", VerdictLabel.FALSE),
    ("apa.at", "Satire", VerdictLabel.OTHER),
    # numeric scales
    ("numerama.com", "0/5", VerdictLabel.FALSE),
    ("numerama.com", "1 / 5", VerdictLabel.FALSE),
    ("numerama.com", "2/5", VerdictLabel.PARTIALLY_TRUE),
    ("numerama.com", "3/5", VerdictLabel.PARTIALLY_TRUE),
    ("numerama.com", "4/5", VerdictLabel.TRUE),
    ("numerama.com", "5/5", VerdictLabel.TRUE),
]


def test_golden_suite_covers_enough():
    assert len(GOLDEN) >= 40


@pytest.mark.parametrize("site,rating,expected", GOLDEN)
def test_golden_suite(table, site, rating, expected):
    verdict, provenance = normalize_rating(rating, site, table)
    assert verdict == expected, f"{site}:{rating!r}"
    assert provenance is not Provenance.FALLBACK, f"{site}:{rating!r} fell back"


def test_publisher_rule_wins_over_global(table):
    # "trompeur" maps to partially-true both ways, but provenance must show
    # the publisher row when the site has one
    _, provenance = normalize_rating("Trompeur", "factuel.afp.com", table)
    assert provenance is Provenance.PUBLISHER_RULE
    _, provenance = normalize_rating("Trompeur", "nosuchsite.example", table)
    assert provenance is Provenance.GLOBAL_RULE


def test_fallback_is_other(table):
    verdict, provenance = normalize_rating("complètement zinzin", "nosuchsite.example", table)
    assert verdict is VerdictLabel.OTHER
    assert provenance is Provenance.FALLBACK


def test_canonicalization():
    assert canonical_rating("  FAUX  \t") == "faux"
    assert canonical_rating("Mélangé") == "mélangé"  # diacritics survive
    assert canonical_rating("a b") == "a b"


def test_regex_rows_are_anchored(table):
    # "2/5" matches the scale row but "12/55" must not
    verdict, provenance = normalize_rating("12/55", "x.example", table)
    assert provenance is Provenance.FALLBACK
    assert verdict is VerdictLabel.OTHER


def test_exact_beats_regex_within_scope(table):
    # factuel has exact "faux" and regex "faux[:,]..."; bare string takes the exact row
    verdict, provenance = normalize_rating("faux", "factuel.afp.com", table)
    assert (verdict, provenance) == (VerdictLabel.FALSE, Provenance.PUBLISHER_RULE)


def test_loader_rejects_duplicates(tmp_path):
    bad = tmp_path / "map.tsv"
    bad.write_text(
        "# version: t1\n*\tfaux\tFALSE\n*\tfaux\tTRUE\n",
        encoding="utf-8",
    )
    with pytest.raises(MappingError):
        load_mapping_table(bad)


def test_loader_rejects_bad_verdict(tmp_path):
    bad = tmp_path / "map.tsv"
    bad.write_text("# version: t1\n*\tfaux\tWRONG\n", encoding="utf-8")
    with pytest.raises(MappingError):
        load_mapping_table(bad)


def test_loader_requires_version_header(tmp_path):
    bad = tmp_path / "map.tsv"
    bad.write_text("*\tfaux\tFALSE\n", encoding="utf-8")
    with pytest.raises(MappingError):
        load_mapping_table(bad)


def test_totality_fuzz_10k(table):
    """10,000 arbitrary strings: always a label, never an exception."""
    rng = random.Random(20230901)
    alphabet = string.printable + "éàüßœ«» "
    labels = set(VerdictLabel)
    sites = ["factuel.afp.com", "correctiv.org", "", "x.example", "*"]
    for _ in range(10_000):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 40)))
        verdict, provenance = normalize_rating(raw, rng.choice(sites), table)
        assert verdict in labels
        assert isinstance(provenance, Provenance)


@settings(max_examples=300)
@given(raw=st.text(max_size=60), site=st.text(max_size=20))
def test_totality_property(table, raw, site):
    verdict, _ = normalize_rating(raw, site, table)
    assert verdict in set(VerdictLabel)
