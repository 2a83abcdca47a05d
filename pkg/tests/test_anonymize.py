from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framegbv.annotation import Sentence
from framegbv.anonymize import (Action, AnonymizeConfig, Gazetteer, Kind, PiiMatch,
                                anonymize_corpus, apply_redactions, default_patterns,
                                fold, frequency_name_candidates, fuzzy_place_match,
                                levenshtein, load_external_matches, load_gazetteer,
                                load_patterns, regex_scrub, similarity)
from framegbv.errors import OverlapError, PatternError
from framegbv.synth import NEIGHBORHOODS


def oracle_lev(a, b):
    """Plain recursive edit distance."""
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return d(len(a), len(b))


def S(text, rid="r", idx=0):
    return Sentence(rid, "subjective", idx, text)


def test_date_match():
    ms = regex_scrub("retorna em 12/05/2023")
    assert [(m.kind, m.text, m.confidence) for m in ms] == [(Kind.DATE, "12/05/2023", 1.0)]
    assert regex_scrub("sem digitos aqui") == []


def test_longest_wins_no_overlap():
    # an 11-digit run could also be read as a 9-digit phone: the ID wins
    ms = regex_scrub("cpf 12345678901 tel (81) 99876-5432")
    assert [(m.kind, m.text) for m in ms] == [(Kind.ID, "12345678901"),
                                              (Kind.PHONE, "(81) 99876-5432")]
    for a, b in zip(ms, ms[1:]):
        assert a.span[1] <= b.span[0]


def test_levenshtein_matches_oracle():
    for a, b in [("", ""), ("a", ""), ("viagem", "viajem"), ("kitten", "sitting"),
                 ("boa viagem", "boa viajem"), ("ibura", "ipsep")]:
        assert levenshtein(a, b) == oracle_lev(a, b)


@settings(max_examples=200, deadline=None)
@given(st.text("abcde ", max_size=9), st.text("abcde ", max_size=9))
def test_levenshtein_property(a, b):
    assert levenshtein(a, b) == oracle_lev(a, b) == levenshtein(b, a)


def test_boa_viajem():
    gaz = Gazetteer(["Boa Viagem"])
    ms = fuzzy_place_match("mora em Boa Viajem", gaz)
    assert len(ms) == 1
    assert ms[0].text == "Boa Viajem"
    assert ms[0].confidence == pytest.approx(0.9)
    assert similarity("boa viajem", "boa viagem") == pytest.approx(1 - 1 / 10)
    assert fuzzy_place_match("mora em Boa Viajem", gaz, threshold=1.0) == []
    exact = fuzzy_place_match("mora em Boa Viagem.", gaz)
    assert exact[0].confidence == 1.0 and exact[0].text == "Boa Viagem"
    with pytest.raises(ValueError):
        fuzzy_place_match("x", gaz, threshold=0)


def test_gazetteer_folding(tmp_path):
    assert fold("  Várzea  ") == "varzea"
    p = tmp_path / "g.txt"
    p.write_text("# comment\nVárzea\nvarzea\n\nBoa Viagem\n", encoding="utf-8")
    g = load_gazetteer(p)
    assert g.entries == ("varzea", "boa viagem") and g.max_tokens == 2


def test_name_candidates(lex):
    sents = [S("paciente relata que Mariazinha ligou", idx=0),
             S("Paciente chegou com Mariazinha", idx=1),
             S("Gestante refere Dor", idx=2)]
    flags = frequency_name_candidates(sents, lex, max_freq=5)
    assert [(f.text, f.ref[2]) for f in flags] == [("Mariazinha", 0), ("Mariazinha", 1)]
    assert all(f.action == Action.FLAG for f in flags)
    assert flags[0].confidence == pytest.approx(1 - 2 / 5)
    # frequency above the cap -> not flagged
    assert frequency_name_candidates(sents, lex, max_freq=1) == []
    with pytest.raises(ValueError):
        frequency_name_candidates([], lex)


def test_name_candidate_cannot_be_redacted():
    with pytest.raises(ValueError):
        PiiMatch(("r", "f", 0), (0, 1), Kind.NAME_CANDIDATE, "x", 1.0, Action.REDACT)


def test_apply_redactions():
    text = "retorna em 12/05/2023"
    out, audit, _ = apply_redactions(text, regex_scrub(text))
    assert out == "retorna em [DATE]"
    assert audit.redactions == (("Date", "[DATE]", 11, 17),)
    assert "12/05" not in str(audit.to_dict())
    assert apply_redactions(text, [])[0] == text


def test_adjacent_matches():
    text = "a 01/01/2020 99876-5432 z"
    ms = [PiiMatch(("", "", 0), (2, 12), Kind.DATE, text[2:12], 1.0, Action.REDACT),
          PiiMatch(("", "", 0), (12, 23), Kind.PHONE, text[12:23], 1.0, Action.REDACT)]
    assert apply_redactions(text, ms)[0] == "a [DATE][PHONE] z"
    with pytest.raises(OverlapError):
        apply_redactions(text, [ms[0], PiiMatch(("", "", 0), (5, 14), Kind.ID, "", 1.0,
                                                Action.REDACT)])


def test_patterns_file(tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("# c\nDate\t\\d{2}/\\d{2}\n", encoding="utf-8")
    ps = load_patterns(p)
    assert regex_scrub("em 12/05", ps)[0].text == "12/05"
    p.write_text("Date\t(unclosed\n", encoding="utf-8")
    with pytest.raises(PatternError):
        load_patterns(p)
    p.write_text("Place\tfoo\n", encoding="utf-8")
    with pytest.raises(PatternError):
        load_patterns(p)


def test_corpus_flags_untouched_and_idempotent(lex):
    gaz = Gazetteer(NEIGHBORHOODS)
    sents = [S("Paciente mora em Boa Viajem com Josefina, tel 99876-5432", idx=0),
             S("retorno em 12/05/2023 cpf 123.456.789-00", idx=1)]
    red, audit, review = anonymize_corpus(sents, gaz=gaz, lex=lex)
    assert red[0]["text"] == "Paciente mora em [PLACE] com Josefina, tel [PHONE]"
    assert red[1]["text"] == "retorno em [DATE] cpf [ID]"
    assert [f.text for f in review] == ["Josefina"]
    f = review[0]
    assert red[0]["text"][f.span[0]:f.span[1]] == "Josefina"
    again = [S(r["text"], idx=r["index"]) for r in red]
    red2, audit2, _ = anonymize_corpus(again, gaz=gaz, lex=lex)
    assert [r["text"] for r in red2] == [r["text"] for r in red]
    assert all(not a.redactions for a in audit2)


def test_external_hook(tmp_path, lex):
    p = tmp_path / "ner.jsonl"
    p.write_text('{"record_id": "r", "field": "subjective", "index": 0, "start": 0, '
                 '"end": 3, "kind": "Place", "text": "Olinda"}\n', encoding="utf-8")
    ext = load_external_matches(p)
    red, _, _ = anonymize_corpus([S("Rua Nova 5")], lex=lex, external=ext)
    assert red[0]["text"] == "[PLACE] Nova 5"


fragments = st.sampled_from([
    "paciente ", "refere dor ", "12/05/2023 ", "tel 99876-5432 ", "(81) 3456-7890 ",
    "cpf 123.456.789-00 ", "mora em Boa Viajem ", "Casa Amarela ", "Josefina ",
    "2023-01-02 ", "cns 123 4567 8901 2345 ", "[DATE] ", "1", "-", "/", "9",
])


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(fragments, min_size=1, max_size=8).map("".join),
                min_size=1, max_size=4))
def test_scrub_is_idempotent(texts):
    gaz = Gazetteer(NEIGHBORHOODS)
    pats = default_patterns()
    sents = [S(t.strip() or "x", idx=i) for i, t in enumerate(texts)]
    red, _, review = anonymize_corpus(sents, pats, gaz)
    out = [S(r["text"], idx=r["index"]) for r in red]
    for s in out:
        assert regex_scrub(s, pats) == []
    red2, audit2, _ = anonymize_corpus(out, pats, gaz)
    assert [r["text"] for r in red2] == [r["text"] for r in red]
    assert sum(len(a.redactions) for a in audit2) == 0
    for f in review:
        text = red[f.ref[2]]["text"]
        assert text[f.span[0]:f.span[1]] == f.text
