"""
=====================================
Frames, lexical units and annotations
=====================================

Load the bundled lexicon, read a small annotation file, attach lexical
units to the annotation sets and look at the features one record yields.
"""

# %%
# The lexicon
# -----------
# Frames belong to one of three domains.  Only Healthcare and Violence
# frames are modelled; General frames still appear in the annotations.

from pathlib import Path

from framegbv.annotation import fe_cooccurrences, parse_annotations, resolve_corpus
from framegbv.featurize import count_features
from framegbv.lexicon import Domain, frames_in_domain, load_default_lexicon, qualia_neighbors

lex = load_default_lexicon()
print(lex)
for domain in Domain:
    print(domain.value, [f.name for f in frames_in_domain(lex, domain)])

# qualia relations link lexical units across frames
exam = lex.lu("examination.n")
print([(rel, lu.lemma_pos) for rel, lu in qualia_neighbors(lex, exam)])

# %%
# Annotations
# -----------
# Each annotation set names the evoked frame and the raw lemma the
# annotator typed.  Resolution lowercases the lemma and requires the
# lexicon to agree on the frame.

fixture = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "annotations_fixture.jsonl"
records = parse_annotations(fixture, lex)
resolved, report = resolve_corpus(records, lex)
print(f"resolved {report.resolved}/{report.total} sets "
      f"({report.unknown_lemma} unknown lemma, {report.frame_mismatch} frame mismatch)")
print("unresolved lemmas:", dict(report.unresolved_lemmas))

# %%
# Features of one record
# ----------------------
# Frames, frame elements, lexical units and cross-frame FE pairs within a
# sentence all become count features.

rec = resolved[1]
for sentence in rec.sentences:
    print(f"  {sentence.field}: {sentence.text}")
for key, value in sorted(count_features(rec, lex).items()):
    print(f"  {key:60s} {value}")
print(dict(fe_cooccurrences(rec, lex)))
