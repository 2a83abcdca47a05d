"""Frame-semantic annotation sets over record sentences.

Annotation interchange format: JSON Lines, one record per line::

    {"record_id": "r0001",
     "sentences": [{"field": "subjective", "index": 0, "text": "paciente gestante"}],
     "annotation_sets": [
        {"field": "subjective", "index": 0, "target": [9, 17],
         "frame": "Health_conditions", "lemma": "gestante.n", "lu": null,
         "fe_spans": [{"fe": "Patient", "span": [0, 8]}]}]}

Spans are half-open ``[start, end)`` offsets in code points of the
sentence text.  ``lemma`` is the target lemma as delivered by the parser,
``lu`` the lexicon LU it resolved to (``null`` while unresolved).
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (ForeignFrameElement, IntegrityError, ParseError, SpanError,
                     UnknownFrame)
from .lexicon import MODELED_DOMAINS

FIELDS = ("subjective", "objective", "assessment", "plan", "referral_reason",
          "complement", "observation", "icd_description")


@dataclass(frozen=True)
class Sentence:
    record_id: str
    field: str
    index: int
    text: str

    @property
    def key(self):
        return (self.field, self.index)


@dataclass(frozen=True)
class AnnotationSet:
    field: str
    index: int
    target: tuple
    frame: str
    lemma: str | None = None
    lu: str | None = None
    fe_spans: tuple = ()

    @property
    def sentence_key(self):
        return (self.field, self.index)

    @property
    def resolved(self):
        return self.lu is not None


@dataclass(frozen=True)
class AnnotatedRecord:
    record_id: str
    sentences: tuple = ()
    annotation_sets: tuple = ()

    def sentence(self, key):
        for s in self.sentences:
            if s.key == key:
                return s
        raise KeyError(key)


@dataclass
class ResolutionReport:
    total: int = 0
    resolved: int = 0
    frame_mismatch: int = 0
    unknown_lemma: int = 0
    unresolved_lemmas: Counter = field(default_factory=Counter)

    @property
    def rate(self):
        return round(self.resolved / self.total, 3) if self.total else 0.0

    def merge(self, other):
        self.total += other.total
        self.resolved += other.resolved
        self.frame_mismatch += other.frame_mismatch
        self.unknown_lemma += other.unknown_lemma
        self.unresolved_lemmas.update(other.unresolved_lemmas)
        return self


# --- parsing -----------------------------------------------------------------

def _span(value, what):
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
        raise ParseError(f"{what}: span must be a pair of integers, got {value!r}")
    return (value[0], value[1])


def _check_span(span, text, record_id, index, what):
    start, end = span
    if not (0 <= start < end <= len(text)):
        raise SpanError(
            f"record {record_id} sentence {index}: {what} span {list(span)} outside "
            f"[0, {len(text)})", record_id=record_id, sentence_index=index)


def record_from_dict(doc, lex):
    """Build and validate one :class:`AnnotatedRecord` against ``lex``."""
    try:
        record_id = str(doc["record_id"])
        raw_sentences = doc.get("sentences", [])
        raw_sets = doc.get("annotation_sets", [])
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"malformed record: {exc!r}") from exc

    sentences = {}
    for s in raw_sentences:
        try:
            sent = Sentence(record_id, s["field"], int(s["index"]), s["text"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"record {record_id}: malformed sentence {s!r}") from exc
        if sent.field not in FIELDS:
            raise ParseError(f"record {record_id}: unknown field {sent.field!r}")
        if not isinstance(sent.text, str) or not sent.text:
            raise ParseError(f"record {record_id}: empty sentence text at "
                             f"{sent.field}[{sent.index}]")
        if sent.key in sentences:
            raise ParseError(f"record {record_id}: duplicate sentence "
                             f"{sent.field}[{sent.index}]")
        sentences[sent.key] = sent

    sets = []
    for a in raw_sets:
        try:
            key = (a["field"], int(a["index"]))
            frame = a["frame"]
            target = _span(a["target"], f"record {record_id}")
            fe_spans = tuple((fe["fe"], _span(fe["span"], f"record {record_id}"))
                             for fe in a.get("fe_spans", []))
            lemma = a.get("lemma")
            lu = a.get("lu")
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"record {record_id}: malformed annotation set {a!r}") from exc
        if key not in sentences:
            raise ParseError(f"record {record_id}: annotation set references missing "
                             f"sentence {key[0]}[{key[1]}]")
        text = sentences[key].text
        _check_span(target, text, record_id, key[1], "target")
        if not lex.has_frame(frame):
            raise UnknownFrame(f"record {record_id}: unknown frame {frame!r}")
        for fe_name, span in fe_spans:
            if not lex.frame_has_element(frame, fe_name):
                raise ForeignFrameElement(
                    f"record {record_id}: frame element {fe_name!r} does not belong "
                    f"to frame {frame!r}")
            _check_span(span, text, record_id, key[1], f"frame element {fe_name}")
        if lu is not None:
            entry = lex.lu(lu)
            if entry is None or entry.frame != frame:
                raise IntegrityError(f"record {record_id}: lexical unit {lu!r} does "
                                     f"not evoke {frame!r}", lu)
        sets.append(AnnotationSet(key[0], key[1], target, frame, lemma, lu, fe_spans))

    return AnnotatedRecord(record_id, tuple(sentences.values()), tuple(sets))


def record_to_dict(rec):
    return {
        "record_id": rec.record_id,
        "sentences": [{"field": s.field, "index": s.index, "text": s.text}
                      for s in rec.sentences],
        "annotation_sets": [
            {"field": a.field, "index": a.index, "target": list(a.target),
             "frame": a.frame, "lemma": a.lemma, "lu": a.lu,
             "fe_spans": [{"fe": fe, "span": list(span)} for fe, span in a.fe_spans]}
            for a in rec.annotation_sets],
    }


def _iter_lines(path):
    path = Path(path)
    try:
        handle = path.open(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc


def parse_annotations(path, lex):
    records = []
    seen = set()
    for lineno, doc in _iter_lines(path):
        rec = record_from_dict(doc, lex)
        if rec.record_id in seen:
            raise ParseError(f"{path}:{lineno}: duplicate record {rec.record_id}")
        seen.add(rec.record_id)
        records.append(rec)
    return records


def validate_annotations(path, lex):
    """Collect every per-record problem instead of stopping at the first.

    Returns rows ``(line, record_id, sentence_index, error_kind, message)``.
    """
    problems = []
    try:
        lines = list(_iter_lines(path))
    except ParseError as exc:
        return [(None, None, None, "ParseError", str(exc))]
    for lineno, doc in lines:
        try:
            record_from_dict(doc, lex)
        except (ParseError, SpanError, UnknownFrame, ForeignFrameElement,
                IntegrityError) as exc:
            rid = doc.get("record_id") if isinstance(doc, dict) else None
            problems.append((lineno, rid, getattr(exc, "sentence_index", None),
                             type(exc).__name__, str(exc)))
    return problems


def write_annotations(records, path):
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False) + "\n")


# --- lexical-unit resolution ---------------------------------------------------

def _strip_punct(s):
    start, end = 0, len(s)
    while start < end and unicodedata.category(s[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(s[end - 1]).startswith("P"):
        end -= 1
    return s[start:end]


def normalize_lemma(raw):
    """Lowercase the lemma, strip surrounding punctuation, keep ``.pos``.

    Returns ``None`` when there is no ``.pos`` suffix to keep.
    """
    if not raw:
        return None
    raw = raw.strip()
    if "." not in raw:
        return None
    lemma, pos = raw.rsplit(".", 1)
    lemma = _strip_punct(lemma.strip().lower())
    if not lemma or not pos:
        return None
    return f"{lemma}.{pos}"


def resolve_lexical_units(rec, lex, report=None):
    """Attach lexicon LUs to annotation sets still carrying a raw lemma.

    A set resolves only to an LU with the normalised lemma *and* the evoked
    frame.  Unresolved sets keep their frame and are tallied in ``report``.
    """
    if report is None:
        report = ResolutionReport()
    out = []
    for a in rec.annotation_sets:
        report.total += 1
        if a.lu is not None:
            report.resolved += 1
            out.append(a)
            continue
        norm = normalize_lemma(a.lemma)
        entry = lex.lu(norm) if norm else None
        if entry is not None and entry.frame == a.frame:
            report.resolved += 1
            out.append(replace(a, lu=entry.lemma_pos))
            continue
        if entry is not None:
            report.frame_mismatch += 1
        else:
            report.unknown_lemma += 1
        report.unresolved_lemmas[a.lemma] += 1
        out.append(a)
    return replace(rec, annotation_sets=tuple(out))


def resolve_corpus(records, lex):
    report = ResolutionReport()
    return [resolve_lexical_units(r, lex, report) for r in records], report


# --- frame-element co-occurrence -----------------------------------------------

def cooccurrence_key(frame_a, fe_a, frame_b, fe_b):
    left, right = sorted([(frame_a, fe_a), (frame_b, fe_b)])
    return f"co:{left[0]}.{left[1]}|{right[0]}.{right[1]}"


def fe_cooccurrences(rec, lex):
    """Cross-frame FE pairs within each sentence, as a Counter of keys."""
    by_sentence = {}
    for a in rec.annotation_sets:
        by_sentence.setdefault(a.sentence_key, []).append(a)
    out = Counter()
    for sets in by_sentence.values():
        for i in range(len(sets)):
            for j in range(i + 1, len(sets)):
                a, b = sets[i], sets[j]
                if a.frame == b.frame:
                    continue
                if (lex.frame_domain(a.frame) not in MODELED_DOMAINS
                        and lex.frame_domain(b.frame) not in MODELED_DOMAINS):
                    continue
                for fe_a, _ in a.fe_spans:
                    for fe_b, _ in b.fe_spans:
                        out[cooccurrence_key(a.frame, fe_a, b.frame, fe_b)] += 1
    return out
