import random
from collections import Counter

import pytest

from framegbv.annotation import AnnotatedRecord, AnnotationSet
from framegbv.errors import UnknownFrame
from framegbv.patterns import (pattern_report, top_frames_by_domain, top_lus_by_domain,
                               top_lus_for_frame, write_pattern_tables)


def rec(rid, *sets):
    return AnnotatedRecord(rid, (), tuple(
        AnnotationSet("subjective", 0, (0, 1), frame, None, lu) for frame, lu in sets))


@pytest.fixture
def records():
    return [
        rec("a", ("Health_conditions", "gestante.n"), ("Health_conditions", "gestante.n"),
            ("Symptoms", "dor.n"), ("Attack", "agredir.v"), ("Fear", "medo.n")),
        rec("b", ("Health_conditions", "gravidez.n"), ("Health_conditions", None),
            ("Health_conditions", "gestante.n"), ("Symptoms", None),
            ("Experience_bodily_harm", "lesão.n")),
        rec("c", ("Attack", "agredir.v"), ("Diagnosing", "diagnosticar.v")),
    ]


def test_empty():
    assert top_frames_by_domain([], None) == {"Healthcare": [], "Violence": []}


def test_top_frames(lex, records):
    got = top_frames_by_domain(records, lex)
    assert got["Healthcare"][0] == ("Health_conditions", 5)
    assert got["Healthcare"][1:] == [("Symptoms", 2), ("Diagnosing", 1)]
    assert got["Violence"] == [("Attack", 2), ("Experience_bodily_harm", 1)]
    # General-domain Fear appears nowhere
    assert all(f != "Fear" for rows in got.values() for f, _ in rows)


def test_top_lus(lex, records):
    got = top_lus_by_domain(records, lex)
    assert got["Healthcare"][0] == ("gestante.n", 3)
    assert sum(c for _, c in got["Healthcare"]) == 6  # unresolved sets excluded
    assert top_lus_by_domain(records, lex, n=0) == {"Healthcare": [], "Violence": []}


def test_drilldown(lex, records):
    got = top_lus_for_frame(records, "Health_conditions", lex=lex)
    assert got == [("gestante.n", 3), ("gravidez.n", 1)]
    assert top_lus_for_frame(records, "Medical_examination", lex=lex) == []
    with pytest.raises(UnknownFrame):
        top_lus_for_frame(records, "Nope", lex=lex)
    # drill-down never exceeds the frame's evocation count
    frames = dict(top_frames_by_domain(records, lex)["Healthcare"])
    assert sum(c for _, c in got) <= frames["Health_conditions"]


def test_drilldown_matches_independent_scan(lex, fixtures_dir):
    from framegbv.annotation import parse_annotations, resolve_corpus
    recs, _ = resolve_corpus(parse_annotations(fixtures_dir / "annotations_fixture.jsonl",
                                               lex), lex)
    scan = Counter()
    for line in (fixtures_dir / "annotations_fixture.jsonl").read_text("utf-8").splitlines():
        import json
        for a in json.loads(line)["annotation_sets"]:
            lemma = a["lemma"].lower()
            if a["frame"] == "Health_conditions" and lex.lu(lemma) and \
                    lex.lu(lemma).frame == "Health_conditions":
                scan[lemma] += 1
    assert dict(top_lus_for_frame(recs, "Health_conditions", lex=lex)) == dict(scan)


def test_permutation_invariant(lex, records):
    a = pattern_report(records, lex).to_dict()
    shuffled = list(records)
    random.Random(3).shuffle(shuffled)
    assert pattern_report(shuffled, lex).to_dict() == a


def test_write_tables(lex, records, tmp_path):
    paths = write_pattern_tables(pattern_report(records, lex), tmp_path)
    assert [p.name for p in paths] == ["top_frames.tsv", "top_lus.tsv", "drilldown.tsv"]
    lines = (tmp_path / "top_frames.tsv").read_text("utf-8").splitlines()
    assert lines[0] == "domain\trank\titem\tcount"
    assert lines[1] == "Healthcare\t1\tHealth_conditions\t5"
