import json
from itertools import chain

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framegbv.errors import IntegrityError, ParseError, UnknownLexicalUnit
from framegbv.lexicon import (Domain, Frame, FrameElement, LexicalUnit, Lexicon,
                              QualiaRelation, default_lexicon_path, frames_in_domain,
                              load_lexicon, lu_for_lemma, qualia_neighbors, save_lexicon)


def write(tmp_path, doc, name="lex.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


MINIMAL = {
    "format_version": "1.0",
    "frames": [{"name": "Diagnosing", "domain": "Healthcare"}],
    "frame_elements": [{"frame": "Diagnosing", "name": "Patient"}],
    "lexical_units": [{"lemma_pos": "diagnose.v", "frame": "Diagnosing"}],
    "qualia_relations": [],
}


def test_minimal_lexicon_counts(tmp_path):
    lex = load_lexicon(write(tmp_path, MINIMAL))
    assert lex.counts() == (1, 1, 1, 0)


def test_dangling_lu_frame_names_the_lu(tmp_path):
    doc = dict(MINIMAL, lexical_units=[{"lemma_pos": "bater.v", "frame": "Attack"}])
    with pytest.raises(IntegrityError) as err:
        load_lexicon(write(tmp_path, doc))
    assert err.value.identifier == "bater.v"
    assert "bater.v" in str(err.value)


@pytest.mark.parametrize("mutate", [
    lambda d: d["frame_elements"].append({"frame": "Nope", "name": "X"}),
    lambda d: d["qualia_relations"].append(
        {"lu_a": "diagnose.v", "relation": "telic", "lu_b": "missing.n"}),
    lambda d: d["qualia_relations"].append(
        {"lu_a": "diagnose.v", "relation": "telic", "lu_b": "diagnose.v"}),
    lambda d: d["frames"].append({"name": "Diagnosing", "domain": "Violence"}),
    lambda d: d["frames"].append({"name": "Empty", "domain": "General"}),
    lambda d: d["lexical_units"].append({"lemma_pos": "diagnose.v", "frame": "Diagnosing"}),
])
def test_integrity_violations(tmp_path, mutate):
    doc = json.loads(json.dumps(MINIMAL))
    mutate(doc)
    with pytest.raises(IntegrityError):
        load_lexicon(write(tmp_path, doc))


def test_lu_evoking_two_frames_is_flagged(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["frames"].append({"name": "Medical_examination", "domain": "Healthcare"})
    doc["frame_elements"].append({"frame": "Medical_examination", "name": "Patient"})
    doc["lexical_units"].append({"lemma_pos": "diagnose.v", "frame": "Medical_examination"})
    with pytest.raises(IntegrityError, match="more than once"):
        load_lexicon(write(tmp_path, doc))


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load_lexicon(p)
    with pytest.raises(ParseError):
        load_lexicon(write(tmp_path, {"frames": [{"domain": "Healthcare"}]}))
    with pytest.raises(ParseError):
        load_lexicon(write(tmp_path, {"frames": [{"name": "A", "domain": "Sports"}]}))


def test_fixture_lexicon_counts(lex):
    doc = json.loads(default_lexicon_path().read_text(encoding="utf-8"))
    n_health = sum(f["domain"] == "Healthcare" for f in doc["frames"])
    n_violence = sum(f["domain"] == "Violence" for f in doc["frames"])
    assert (n_health, n_violence) == (10, 8)
    assert len(doc["lexical_units"]) == 40 and len(doc["qualia_relations"]) == 6
    _, _, n_lu, n_q = lex.counts()
    assert (n_lu, n_q) == (40, 6)
    assert len(frames_in_domain(lex, Domain.HEALTHCARE)) == 10
    assert len(frames_in_domain(lex, "Violence")) == 8


def test_frames_in_domain_sorted_and_exhaustive(lex):
    parts = [frames_in_domain(lex, d) for d in Domain]
    for d, part in zip(Domain, parts):
        assert all(f.domain == d for f in part)
        assert [f.name for f in part] == sorted(f.name for f in part)
    names = [f.name for f in chain.from_iterable(parts)]
    assert len(names) == len(set(names)) == len(lex.frames)


def test_frames_in_domain_empty_cases():
    empty = Lexicon([], [], [], [])
    assert frames_in_domain(empty, Domain.VIOLENCE) == []
    general = Lexicon([Frame("Fear", Domain.GENERAL)], [FrameElement("Fear", "Experiencer")],
                      [], [])
    assert frames_in_domain(general, Domain.HEALTHCARE) == []


def test_lu_lookup(lex):
    assert lu_for_lemma(lex, "gestante.n").frame == "Health_conditions"
    assert lu_for_lemma(lex, "inexistente.n") is None
    assert lu_for_lemma(lex, "Gestante.n") is None


def test_qualia_neighbors(lex):
    assert ("telic", lex.lu("diagnose.v")) in qualia_neighbors(lex, lex.lu("examination.n"))
    assert ("telic", lex.lu("examination.n")) in qualia_neighbors(lex, lex.lu("diagnose.v"))
    assert qualia_neighbors(lex, lex.lu("febre.n")) == []
    with pytest.raises(UnknownLexicalUnit):
        qualia_neighbors(lex, LexicalUnit("nada.n", "Symptoms"))


def test_qualia_neighbors_order():
    lex = Lexicon(
        [Frame("F", Domain.GENERAL)], [FrameElement("F", "E")],
        [LexicalUnit(x, "F") for x in ("a.n", "b.n", "c.n")],
        [QualiaRelation("a.n", "telic", "c.n"), QualiaRelation("b.n", "agentive", "a.n"),
         QualiaRelation("a.n", "telic", "b.n")])
    got = [(r, lu.lemma_pos) for r, lu in qualia_neighbors(lex, lex.lu("a.n"))]
    assert got == [("agentive", "b.n"), ("telic", "b.n"), ("telic", "c.n")]


def test_round_trip(lex, tmp_path):
    save_lexicon(lex, tmp_path / "copy.json")
    again = load_lexicon(tmp_path / "copy.json")
    assert again == lex
    # one entry per line keeps diffs local
    lines = (tmp_path / "copy.json").read_text(encoding="utf-8").splitlines()
    assert len(lines) > sum(lex.counts())


names = st.text(alphabet="abcdefgh_", min_size=1, max_size=6)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(names, st.tuples(st.sampled_from(list(Domain)),
                                        st.lists(names, min_size=1, max_size=3, unique=True)),
                       max_size=5),
       st.data())
def test_round_trip_and_referential_integrity(tmp_path_factory, frames, data):
    fr = [Frame(n, d) for n, (d, _) in frames.items()]
    fes = [FrameElement(n, e) for n, (_, es) in frames.items() for e in es]
    lus = []
    if frames:
        lemmas = data.draw(st.lists(names, max_size=6, unique=True))
        lus = [LexicalUnit(f"{l}.n", data.draw(st.sampled_from(sorted(frames))))
               for l in lemmas]
    qualia = []
    if len(lus) >= 2:
        for _ in range(data.draw(st.integers(0, 3))):
            a, b = data.draw(st.lists(st.sampled_from(lus), min_size=2, max_size=2,
                                      unique=True))
            qualia.append(QualiaRelation(a.lemma_pos, "telic", b.lemma_pos))
        qualia = list({(q.lu_a, q.lu_b): q for q in qualia}.values())
    lex = Lexicon(fr, fes, lus, qualia)
    path = tmp_path_factory.mktemp("lex") / "l.json"
    save_lexicon(lex, path)
    again = load_lexicon(path)
    assert again == lex
    for lu in again.lexical_units:
        assert again.has_frame(lu.frame)
    for fe in again.frame_elements:
        assert again.has_frame(fe.frame)
    for q in again.qualia_relations:
        assert again.lu(q.lu_a) and again.lu(q.lu_b)
    union = sorted(f.name for d in Domain for f in frames_in_domain(again, d))
    assert union == sorted(frames)
