import json

import pytest

from framegbv.annotation import (cooccurrence_key, fe_cooccurrences, normalize_lemma,
                                 parse_annotations, record_from_dict, record_to_dict,
                                 resolve_corpus, resolve_lexical_units, validate_annotations,
                                 write_annotations)
from framegbv.errors import (ForeignFrameElement, IntegrityError, ParseError, SpanError,
                             UnknownFrame)


@pytest.fixture
def fixture_records(lex, fixtures_dir):
    return parse_annotations(fixtures_dir / "annotations_fixture.jsonl", lex)


def doc(text="paciente gestante", sets=None):
    return {"record_id": "r1",
            "sentences": [{"field": "subjective", "index": 0, "text": text}],
            "annotation_sets": sets or []}


def aset(frame="Health_conditions", target=(9, 17), fes=(), lemma="gestante.n", lu=None):
    return {"field": "subjective", "index": 0, "target": list(target), "frame": frame,
            "lemma": lemma, "lu": lu,
            "fe_spans": [{"fe": fe, "span": list(span)} for fe, span in fes]}


def test_fixture_parses(fixture_records):
    assert len(fixture_records) == 5
    assert sum(len(r.annotation_sets) for r in fixture_records) == 12


def test_span_at_text_length_is_accepted(lex):
    rec = record_from_dict(doc(sets=[aset(target=(9, 17))]), lex)
    assert rec.annotation_sets[0].target == (9, 17)


@pytest.mark.parametrize("target", [(9, 18), (5, 5), (-1, 3), (10, 9)])
def test_bad_target_span(lex, target):
    with pytest.raises(SpanError) as err:
        record_from_dict(doc(sets=[aset(target=target)]), lex)
    assert err.value.record_id == "r1" and err.value.sentence_index == 0


def test_bad_fe_span(lex):
    with pytest.raises(SpanError):
        record_from_dict(doc(sets=[aset(fes=[("Patient", (0, 40))])]), lex)


def test_unknown_frame(lex):
    with pytest.raises(UnknownFrame):
        record_from_dict(doc(sets=[aset(frame="Nonexistent")]), lex)


def test_foreign_frame_element(lex):
    # Diagnosing has no Victim role
    with pytest.raises(ForeignFrameElement):
        record_from_dict(doc(sets=[aset(frame="Diagnosing", fes=[("Victim", (0, 8))])]), lex)


def test_explicit_lu_must_evoke_frame(lex):
    with pytest.raises(IntegrityError):
        record_from_dict(doc(sets=[aset(frame="Fear", lu="gestante.n")]), lex)


def test_malformed_records(lex):
    with pytest.raises(ParseError):
        record_from_dict({"sentences": []}, lex)
    with pytest.raises(ParseError):
        record_from_dict(doc(sets=[dict(aset(), index=3)]), lex)
    with pytest.raises(ParseError):
        record_from_dict(doc(sets=[dict(aset(), target=[1.5, 3])]), lex)


def test_validate_collects_all_problems(lex, tmp_path):
    p = tmp_path / "a.jsonl"
    lines = [doc(sets=[aset()]), doc(sets=[aset(frame="Nope")]),
             dict(doc(sets=[aset(target=(0, 99))]), record_id="r3")]
    p.write_text("\n".join(json.dumps(x) for x in lines) + "\n", encoding="utf-8")
    rows = validate_annotations(p, lex)
    assert [(r[0], r[3]) for r in rows] == [(2, "UnknownFrame"), (3, "SpanError")]
    assert rows[1][1] == "r3" and rows[1][2] == 0


def test_duplicate_record_ids(lex, tmp_path):
    p = tmp_path / "a.jsonl"
    p.write_text((json.dumps(doc()) + "\n") * 2, encoding="utf-8")
    with pytest.raises(ParseError, match="duplicate"):
        parse_annotations(p, lex)


def test_round_trip(lex, fixture_records, tmp_path):
    write_annotations(fixture_records, tmp_path / "out.jsonl")
    again = parse_annotations(tmp_path / "out.jsonl", lex)
    assert again == fixture_records
    assert [record_to_dict(r) for r in again] == [record_to_dict(r) for r in fixture_records]


@pytest.mark.parametrize("raw,expected", [
    ("gestante.n", "gestante.n"),
    ("Companheiro.n", "companheiro.n"),
    ("  \"Gestante,\".n ", "gestante.n"),
    ("(dor).n", "dor.n"),
    ("gestante", None),
    ("...n", None),
    ("", None),
    (None, None),
])
def test_normalize_lemma(raw, expected):
    assert normalize_lemma(raw) == expected


def test_resolution_rate_on_fixture(lex, fixture_records):
    resolved, report = resolve_corpus(fixture_records, lex)
    # 12 sets: queixa.n is not in the lexicon and medo.n is annotated under
    # Health_conditions while the lexicon lists it under Fear
    assert (report.total, report.resolved) == (12, 10)
    assert (report.unknown_lemma, report.frame_mismatch) == (1, 1)
    assert report.rate == 0.833
    f001 = resolved[0]
    assert [a.lu for a in f001.annotation_sets] == ["gestante.n", "medo.n", "companheiro.n"]
    f003 = resolved[2]
    assert all(a.lu is None for a in f003.annotation_sets)
    # unresolved sets keep their frame
    assert [a.frame for a in f003.annotation_sets] == [a.frame for a in
                                                      fixture_records[2].annotation_sets]


def test_resolution_is_idempotent(lex, fixture_records):
    once, _ = resolve_corpus(fixture_records, lex)
    twice, report = resolve_corpus(once, lex)
    assert once == twice and report.resolved == 10


def test_cooccurrence_key_is_symmetric():
    assert (cooccurrence_key("B", "x", "A", "y") == cooccurrence_key("A", "y", "B", "x")
            == "co:A.y|B.x")


def test_fixture_cooccurrences(lex, fixture_records):
    got = [dict(fe_cooccurrences(r, lex)) for r in fixture_records]
    assert got[0] == {
        "co:Fear.Experiencer|Health_conditions.Patient": 1,
        "co:Fear.Stimulus|Health_conditions.Patient": 1,
        "co:Health_conditions.Patient|Personal_relationships.Partner_2": 1,
    }
    assert got[1] == {"co:Diagnosing.Patient|Experience_bodily_harm.Injury": 1}
    assert got[2] == {"co:Health_conditions.Condition|Symptoms.Symptom": 1}
    assert got[3] == {} and got[4] == {}


def test_cooccurrence_needs_modeled_domain(lex):
    text = "medo do companheiro"
    sets = [aset(frame="Fear", target=(0, 4), lemma="medo.n", fes=[("Experiencer", (8, 19))]),
            aset(frame="Personal_relationships", target=(8, 19), lemma="companheiro.n",
                 fes=[("Partner_2", (8, 19))])]
    rec = record_from_dict(doc(text, sets), lex)
    assert fe_cooccurrences(rec, lex) == {}


def test_cooccurrence_is_per_sentence(lex, fixture_records):
    # f004 has a Healthcare and a General frame in different sentences
    assert len({a.sentence_key for a in fixture_records[3].annotation_sets}) == 2
    assert fe_cooccurrences(fixture_records[3], lex) == {}
