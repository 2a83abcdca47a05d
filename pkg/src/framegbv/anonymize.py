"""Rule-based PII scrubbing for open-text fields.

Three detectors feed one redaction step:

* regular expressions for dates, ID-shaped and phone-shaped digit groups;
* fuzzy matching of token n-grams against a gazetteer of local place names;
* frequency-based flagging of rare capitalised tokens as possible names.

Regex and place matches are redacted to ``[DATE]``, ``[ID]``, ``[PHONE]``,
``[PLACE]``.  Name candidates are only flagged for manual review and are
never altered.  Matches produced elsewhere (e.g. an NER model) can be
merged through :func:`load_external_matches`.
"""

from __future__ import annotations

import enum
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import OverlapError, PatternError


class Kind(str, enum.Enum):
    DATE = "Date"
    ID = "Id"
    PHONE = "Phone"
    PLACE = "Place"
    NAME_CANDIDATE = "NameCandidate"


class Action(str, enum.Enum):
    REDACT = "Redact"
    FLAG = "Flag"


PLACEHOLDERS = {Kind.DATE: "[DATE]", Kind.ID: "[ID]", Kind.PHONE: "[PHONE]",
                Kind.PLACE: "[PLACE]"}


@dataclass(frozen=True)
class PiiMatch:
    ref: tuple          # (record_id, field, index)
    span: tuple         # [start, end) in code points
    kind: Kind
    text: str
    confidence: float
    action: Action

    def __post_init__(self):
        if self.kind == Kind.NAME_CANDIDATE and self.action != Action.FLAG:
            raise ValueError("name candidates can only be flagged")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


# --- patterns ---------------------------------------------------------------------

DEFAULT_PATTERNS = (
    (Kind.DATE, r"(?<!\d)\d{1,2}[/.-]\d{1,2}[/.-](?:\d{4}|\d{2})(?!\d)"),
    (Kind.DATE, r"(?<!\d)\d{4}-\d{2}-\d{2}(?!\d)"),
    (Kind.ID, r"(?<!\d)\d{3}\.\d{3}\.\d{3}-\d{2}(?!\d)"),
    (Kind.ID, r"(?<!\d)\d{3} ?\d{4} ?\d{4} ?\d{4}(?!\d)"),
    (Kind.ID, r"(?<!\d)\d{11}(?!\d)"),
    (Kind.PHONE, r"(?<!\d)\(?\d{2}\)? ?9?\d{4}-\d{4}(?!\d)"),
    (Kind.PHONE, r"(?<![\d-])9?\d{4}-\d{4}(?!\d)"),
    (Kind.PHONE, r"(?<!\d)9\d{8}(?!\d)"),
)


@dataclass(frozen=True)
class PatternSet:
    patterns: tuple   # ((Kind, compiled regex), ...)

    @classmethod
    def from_pairs(cls, pairs):
        compiled = []
        for kind, source in pairs:
            try:
                kind = Kind(kind)
            except ValueError as exc:
                raise PatternError(f"unknown pattern kind {kind!r}") from exc
            if kind not in PLACEHOLDERS or kind == Kind.PLACE:
                raise PatternError(f"kind {kind.value} cannot be a regex pattern")
            try:
                compiled.append((kind, re.compile(source)))
            except re.error as exc:
                raise PatternError(f"pattern {source!r} does not compile: {exc}") from exc
        return cls(tuple(compiled))


def default_patterns():
    return PatternSet.from_pairs(DEFAULT_PATTERNS)


def load_patterns(path):
    """Plain text, one ``<Kind><TAB><regex>`` per line; ``#`` starts a comment."""
    pairs = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise PatternError(f"{path}:{n}: expected '<Kind>\\t<regex>'")
        kind, source = line.split("\t", 1)
        pairs.append((kind.strip(), source))
    return PatternSet.from_pairs(pairs)


def _select(candidates):
    """Greedy non-overlapping selection; candidates are pre-sorted by priority."""
    chosen = []
    for m in candidates:
        s, e = m.span
        if all(e <= c.span[0] or s >= c.span[1] for c in chosen):
            chosen.append(m)
    return sorted(chosen, key=lambda m: m.span)


def regex_scrub(sentence, patterns=None, ref=None):
    """Non-overlapping regex matches; on overlap the longest match wins,
    then the leftmost."""
    patterns = patterns or default_patterns()
    text, ref = _text_and_ref(sentence, ref)
    cands = []
    for order, (kind, rx) in enumerate(patterns.patterns):
        # every start position, so a longer match is not hidden behind a shorter one
        pos = 0
        while pos < len(text):
            m = rx.search(text, pos)
            if m is None:
                break
            if m.end() > m.start():
                cands.append((m.start(), m.end(), order, kind))
            pos = m.start() + 1
    cands.sort(key=lambda c: (-(c[1] - c[0]), c[0], c[2]))
    return _select([PiiMatch(ref, (s, e), kind, text[s:e], 1.0, Action.REDACT)
                    for s, e, _, kind in cands])


def _text_and_ref(sentence, ref):
    if isinstance(sentence, str):
        return sentence, ref if ref is not None else ("", "", 0)
    return sentence.text, (sentence.record_id, sentence.field, sentence.index)


# --- gazetteer fuzzy matching ------------------------------------------------------

def fold(text):
    """Lowercase, strip accents, collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", text.lower())
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return " ".join(stripped.split())


def levenshtein(a, b):
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def similarity(a, b):
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


class Gazetteer:
    def __init__(self, names):
        entries = []
        for name in names:
            norm = fold(name)
            if norm and norm not in entries:
                entries.append(norm)
        self.entries = tuple(entries)
        self.max_tokens = max((len(e.split()) for e in self.entries), default=0)

    def __len__(self):
        return len(self.entries)


def load_gazetteer(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return Gazetteer(line for line in lines if line.strip() and not line.startswith("#"))


_TOKEN_RE = re.compile(r"[^\W_]+")


def fuzzy_place_match(sentence, gaz, threshold=0.85, ref=None):
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    text, ref = _text_and_ref(sentence, ref)
    tokens = [(m.start(), m.end(), fold(m.group())) for m in _TOKEN_RE.finditer(text)]
    cands = []
    for n in range(1, gaz.max_tokens + 1):
        for i in range(len(tokens) - n + 1):
            window = tokens[i:i + n]
            norm = " ".join(t[2] for t in window)
            s, e = window[0][0], window[-1][1]
            best = 0.0
            for entry in gaz.entries:
                longest = max(len(entry), len(norm))
                if abs(len(entry) - len(norm)) > (1 - threshold) * longest:
                    continue
                best = max(best, similarity(norm, entry))
            if best >= threshold:
                cands.append((best, e - s, s, e))
    cands.sort(key=lambda c: (-c[0], -c[1], c[2]))
    return _select([PiiMatch(ref, (s, e), Kind.PLACE, text[s:e], sim, Action.REDACT)
                    for sim, _, s, e in cands])


# --- frequency-based name candidates ------------------------------------------------

_WORD_RE = re.compile(r"[^\W\d_]+(?:['-][^\W\d_]+)*")
_BOUNDARY_RE = re.compile(r"[.!?]\s*$")


def _words(text):
    """(start, end, token, sentence_initial) for every alphabetic token."""
    out = []
    for m in _WORD_RE.finditer(text):
        before = text[:m.start()]
        initial = not before.strip() or bool(_BOUNDARY_RE.search(before))
        out.append((m.start(), m.end(), m.group(), initial))
    return out


def frequency_name_candidates(sentences, lex=None, max_freq=5):
    """Flag rare, capitalised, non-initial tokens that are not lexicon lemmas."""
    sentences = list(sentences)
    if not sentences:
        raise ValueError("corpus is empty")
    tokenized = [(s, _words(s.text)) for s in sentences]
    freq = Counter(tok.lower() for _, words in tokenized for _, _, tok, _ in words)
    out = []
    for s, words in tokenized:
        for start, end, tok, initial in words:
            if initial or not tok[0].isupper():
                continue
            if start > 0 and s.text[start - 1] == "[":
                continue
            low = tok.lower()
            if lex is not None and lex.has_lemma(low):
                continue
            f = freq[low]
            if f > max_freq:
                continue
            conf = max(0.0, 1.0 - f / max_freq) if max_freq > 0 else 0.0
            out.append(PiiMatch((s.record_id, s.field, s.index), (start, end),
                                Kind.NAME_CANDIDATE, tok, conf, Action.FLAG))
    return out


# --- redaction --------------------------------------------------------------------

@dataclass(frozen=True)
class AuditEntry:
    ref: tuple
    redactions: tuple     # ((kind, placeholder, start, end) in output coordinates)

    def to_dict(self):
        return {"ref": list(self.ref),
                "redactions": [{"kind": k, "placeholder": p, "start": s, "end": e}
                               for k, p, s, e in self.redactions]}


def apply_redactions(sentence, matches, ref=None):
    """Replace Redact matches by placeholders; leave Flag matches in place.

    Returns ``(text, audit, flagged)`` where ``flagged`` lists the Flag
    matches re-anchored to the output text.  The audit never carries the
    original text.
    """
    text, ref = _text_and_ref(sentence, ref)
    ordered = sorted(matches, key=lambda m: m.span)
    for a, b in zip(ordered, ordered[1:]):
        if b.span[0] < a.span[1]:
            raise OverlapError(f"matches {a.span} and {b.span} overlap")
    for m in ordered:
        if not 0 <= m.span[0] < m.span[1] <= len(text):
            raise OverlapError(f"match span {m.span} outside the text")
    pieces, redactions, flagged = [], [], []
    cursor, shift = 0, 0
    for m in ordered:
        s, e = m.span
        pieces.append(text[cursor:s])
        if m.action == Action.REDACT:
            ph = PLACEHOLDERS[m.kind]
            redactions.append((m.kind.value, ph, s + shift, s + shift + len(ph)))
            pieces.append(ph)
            shift += len(ph) - (e - s)
        else:
            flagged.append(PiiMatch(m.ref, (s + shift, e + shift), m.kind, m.text,
                                    m.confidence, m.action))
            pieces.append(text[s:e])
        cursor = e
    pieces.append(text[cursor:])
    return "".join(pieces), AuditEntry(ref, tuple(redactions)), flagged


def _shift_span(span, edits):
    """Map a span through earlier edits ``(start, end, new_len)``."""
    s, e = span
    delta = 0
    for es, ee, new_len in edits:
        if ee <= s:
            delta += new_len - (ee - es)
    return (s + delta, e + delta)


@dataclass(frozen=True)
class AnonymizeConfig:
    fuzzy_threshold: float = 0.85
    max_name_freq: int = 5
    max_passes: int = 5


def detect(sentence, patterns, gaz, cfg, extra=()):
    """Redact-type matches for one sentence: regex, places, external."""
    found = list(regex_scrub(sentence, patterns))
    if gaz is not None and len(gaz):
        found += fuzzy_place_match(sentence, gaz, cfg.fuzzy_threshold)
    found += [m for m in extra if m.action == Action.REDACT]
    found.sort(key=lambda m: (-(m.span[1] - m.span[0]), m.span[0]))
    return _select(found)


def scrub_sentence(sentence, patterns, gaz, cfg=None, flags=(), extra=()):
    """Redact until no detector fires, keeping flagged tokens intact.

    Returns ``(text, audit, flagged)`` in output coordinates.
    """
    cfg = cfg or AnonymizeConfig()
    text = sentence.text
    ref = (sentence.record_id, sentence.field, sentence.index)
    redactions = []
    flags = list(flags)
    pending_extra = list(extra)
    for _ in range(cfg.max_passes):
        probe = _Sent(ref, text)
        found = [m for m in detect(probe, patterns, gaz, cfg, pending_extra)
                 if not any(_overlaps(m.span, (s, e)) for _, _, s, e in redactions)]
        pending_extra = []
        if not found:
            break
        keep_flags = [f for f in flags if not any(_overlaps(f.span, m.span) for m in found)]
        text, audit, keep_flags = apply_redactions(probe, found + keep_flags, ref)
        edits = [(m.span[0], m.span[1], len(PLACEHOLDERS[m.kind])) for m in found]
        redactions = [(k, p) + _shift_span((s, e), edits) for k, p, s, e in redactions]
        redactions += list(audit.redactions)
        redactions.sort(key=lambda r: r[2])
        flags = keep_flags
    return text, AuditEntry(ref, tuple(redactions)), flags


def _overlaps(a, b):
    return a[0] < b[1] and b[0] < a[1]


@dataclass(frozen=True)
class _Sent:
    ref: tuple
    text: str

    @property
    def record_id(self):
        return self.ref[0]

    @property
    def field(self):
        return self.ref[1]

    @property
    def index(self):
        return self.ref[2]


def anonymize_corpus(sentences, patterns=None, gaz=None, lex=None, cfg=None,
                     external=()):
    """Scrub every sentence.

    Returns ``(redacted, audit, review)``: redacted sentence dicts, one audit
    entry per sentence, and the flagged name candidates for manual review.
    """
    cfg = cfg or AnonymizeConfig()
    patterns = patterns or default_patterns()
    sentences = list(sentences)
    if not sentences:
        return [], [], []
    flags = frequency_name_candidates(sentences, lex, cfg.max_name_freq)
    by_ref = {}
    for f in flags:
        by_ref.setdefault(f.ref, []).append(f)
    ext = {}
    for m in external:
        ext.setdefault(m.ref, []).append(m)
    redacted, audit, review = [], [], []
    for s in sentences:
        ref = (s.record_id, s.field, s.index)
        text, entry, kept = scrub_sentence(s, patterns, gaz, cfg, by_ref.get(ref, ()),
                                           ext.get(ref, ()))
        redacted.append({"record_id": s.record_id, "field": s.field, "index": s.index,
                         "text": text})
        audit.append(entry)
        review.extend(kept)
    return redacted, audit, review


def load_external_matches(path):
    """Merge hook for detectors outside this module (JSON Lines).

    Each line: ``{"record_id", "field", "index", "start", "end", "kind",
    "text", "confidence", "action"}``.
    """
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        out.append(PiiMatch((d["record_id"], d["field"], int(d["index"])),
                            (int(d["start"]), int(d["end"])), Kind(d["kind"]),
                            d.get("text", ""), float(d.get("confidence", 1.0)),
                            Action(d.get("action", "Redact"))))
    return out


def match_to_dict(m):
    return {"record_id": m.ref[0], "field": m.ref[1], "index": m.ref[2],
            "start": m.span[0], "end": m.span[1], "kind": m.kind.value,
            "text": m.text, "confidence": round(m.confidence, 6),
            "action": m.action.value}
