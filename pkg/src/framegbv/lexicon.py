"""Frame-semantic vocabulary: frames, frame elements, lexical units and
ternary qualia relations.

The interchange format is a single JSON document::

    {
      "format_version": "1.0",
      "frames":           [{"name": "Diagnosing", "domain": "Healthcare"}, ...],
      "frame_elements":   [{"frame": "Diagnosing", "name": "Patient"}, ...],
      "lexical_units":    [{"lemma_pos": "diagnose.v", "frame": "Diagnosing"}, ...],
      "qualia_relations": [{"lu_a": "examination.n", "relation": "telic",
                            "lu_b": "diagnose.v"}, ...]
    }

:func:`save_lexicon` writes one entry per line so diffs stay readable.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityError, ParseError, UnknownLexicalUnit

FORMAT_VERSION = "1.0"

# Names end up inside feature keys such as "co:A.FEx|B.FEy" and
# "qualia:rel(a,b)", so the separators are reserved.
_NAME_RE = re.compile(r"^[^\s.|(),:]+$")
_LEMMA_POS_RE = re.compile(r"^[^|(),:]+\.[A-Za-z]+$")
_RELATION_RE = re.compile(r"^[^\s|(),:]+$")


class Domain(str, enum.Enum):
    HEALTHCARE = "Healthcare"
    VIOLENCE = "Violence"
    GENERAL = "General"


MODELED_DOMAINS = (Domain.HEALTHCARE, Domain.VIOLENCE)


@dataclass(frozen=True)
class Frame:
    name: str
    domain: Domain
    elements: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class FrameElement:
    frame: str
    name: str


@dataclass(frozen=True)
class LexicalUnit:
    lemma_pos: str
    frame: str

    @property
    def lemma(self):
        return self.lemma_pos.rsplit(".", 1)[0]

    @property
    def pos(self):
        return self.lemma_pos.rsplit(".", 1)[1]


@dataclass(frozen=True)
class QualiaRelation:
    lu_a: str
    relation: str
    lu_b: str


class Lexicon:
    """Validated, read-only lexicon.

    Construct through :meth:`from_dict` or :func:`load_lexicon`; every
    referential invariant is checked once, at construction.
    """

    def __init__(self, frames, frame_elements, lexical_units, qualia_relations,
                 format_version=FORMAT_VERSION):
        self.format_version = format_version
        self._frames = {}
        for fr in frames:
            if not fr.name or not _NAME_RE.match(fr.name):
                raise IntegrityError(f"invalid frame name {fr.name!r}", fr.name)
            if fr.name in self._frames:
                raise IntegrityError(f"duplicate frame {fr.name!r}", fr.name)
            self._frames[fr.name] = fr

        fes_by_frame = {name: set() for name in self._frames}
        self._frame_elements = []
        for fe in frame_elements:
            if fe.frame not in self._frames:
                raise IntegrityError(
                    f"frame element {fe.frame}.{fe.name} references unknown frame "
                    f"{fe.frame!r}", f"{fe.frame}.{fe.name}")
            if not fe.name or not _NAME_RE.match(fe.name):
                raise IntegrityError(f"invalid frame element name {fe.name!r}",
                                     f"{fe.frame}.{fe.name}")
            if fe.name in fes_by_frame[fe.frame]:
                raise IntegrityError(f"duplicate frame element {fe.frame}.{fe.name}",
                                     f"{fe.frame}.{fe.name}")
            fes_by_frame[fe.frame].add(fe.name)
            self._frame_elements.append(fe)

        for name, fr in list(self._frames.items()):
            declared = set(fr.elements)
            undeclared = declared - fes_by_frame[name]
            if undeclared:
                raise IntegrityError(
                    f"frame {name!r} lists elements with no frame_elements entry: "
                    f"{sorted(undeclared)}", name)
            if not fes_by_frame[name]:
                raise IntegrityError(f"frame {name!r} has no frame elements", name)
            self._frames[name] = Frame(name, Domain(fr.domain),
                                       frozenset(fes_by_frame[name]))

        self._lus = {}
        for lu in lexical_units:
            if not _LEMMA_POS_RE.match(lu.lemma_pos):
                raise IntegrityError(f"invalid lemma_pos {lu.lemma_pos!r}", lu.lemma_pos)
            if lu.frame not in self._frames:
                raise IntegrityError(
                    f"lexical unit {lu.lemma_pos!r} evokes unknown frame {lu.frame!r}",
                    lu.lemma_pos)
            if lu.lemma_pos in self._lus:
                # one frame per LU; a second entry means a second frame
                raise IntegrityError(
                    f"lexical unit {lu.lemma_pos!r} declared more than once "
                    f"(frames {self._lus[lu.lemma_pos].frame!r}, {lu.frame!r})",
                    lu.lemma_pos)
            self._lus[lu.lemma_pos] = lu

        self._qualia = []
        seen = set()
        for q in qualia_relations:
            ident = f"{q.relation}({q.lu_a},{q.lu_b})"
            for end in (q.lu_a, q.lu_b):
                if end not in self._lus:
                    raise IntegrityError(
                        f"qualia relation {ident} references unknown lexical unit "
                        f"{end!r}", ident)
            if q.lu_a == q.lu_b:
                raise IntegrityError(f"qualia relation {ident} is reflexive", ident)
            if not _RELATION_RE.match(q.relation):
                raise IntegrityError(f"invalid relation label {q.relation!r}", ident)
            key = (q.lu_a, q.relation, q.lu_b)
            if key in seen:
                raise IntegrityError(f"duplicate qualia relation {ident}", ident)
            seen.add(key)
            self._qualia.append(q)

        self._lemmas = frozenset(lu.lemma for lu in self._lus.values())

    @classmethod
    def from_dict(cls, doc):
        try:
            frames = [Frame(f["name"], Domain(f["domain"]),
                            frozenset(f.get("elements", ())))
                      for f in doc.get("frames", [])]
            fes = [FrameElement(e["frame"], e["name"])
                   for e in doc.get("frame_elements", [])]
            lus = [LexicalUnit(u["lemma_pos"], u["frame"])
                   for u in doc.get("lexical_units", [])]
            qualia = [QualiaRelation(q["lu_a"], q["relation"], q["lu_b"])
                      for q in doc.get("qualia_relations", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed lexicon document: {exc!r}") from exc
        return cls(frames, fes, lus, qualia,
                   format_version=doc.get("format_version", FORMAT_VERSION))

    def to_dict(self):
        return {
            "format_version": self.format_version,
            "frames": [{"name": f.name, "domain": f.domain.value}
                       for f in self.frames],
            "frame_elements": [{"frame": e.frame, "name": e.name}
                               for e in sorted(self._frame_elements,
                                               key=lambda e: (e.frame, e.name))],
            "lexical_units": [{"lemma_pos": u.lemma_pos, "frame": u.frame}
                              for u in self.lexical_units],
            "qualia_relations": [{"lu_a": q.lu_a, "relation": q.relation,
                                  "lu_b": q.lu_b}
                                 for q in self.qualia_relations],
        }

    # collections -----------------------------------------------------------

    @property
    def frames(self):
        return [self._frames[k] for k in sorted(self._frames)]

    @property
    def frame_elements(self):
        return list(self._frame_elements)

    @property
    def lexical_units(self):
        return [self._lus[k] for k in sorted(self._lus)]

    @property
    def qualia_relations(self):
        return sorted(self._qualia, key=lambda q: (q.lu_a, q.relation, q.lu_b))

    def counts(self):
        """(frames, frame elements, lexical units, qualia relations)."""
        return (len(self._frames), len(self._frame_elements), len(self._lus),
                len(self._qualia))

    # queries ---------------------------------------------------------------

    def has_frame(self, name):
        return name in self._frames

    def frame(self, name):
        return self._frames[name]

    def frame_domain(self, name):
        return self._frames[name].domain

    def frame_has_element(self, frame, fe):
        return frame in self._frames and fe in self._frames[frame].elements

    def has_lemma(self, lemma):
        """True when some LU has this bare lemma (no ``.pos`` suffix)."""
        return lemma in self._lemmas

    def lu(self, lemma_pos):
        return self._lus.get(lemma_pos)

    def __eq__(self, other):
        if not isinstance(other, Lexicon):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return "Lexicon(frames=%d, frame_elements=%d, lexical_units=%d, qualia=%d)" % (
            self.counts())


def load_lexicon(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    return Lexicon.from_dict(doc)


def save_lexicon(lex, path):
    doc = lex.to_dict()
    lines = ["{", f'  "format_version": {json.dumps(doc["format_version"])},']
    sections = ["frames", "frame_elements", "lexical_units", "qualia_relations"]
    for i, name in enumerate(sections):
        entries = doc[name]
        lines.append(f'  "{name}": [')
        for j, entry in enumerate(entries):
            sep = "," if j < len(entries) - 1 else ""
            lines.append("    " + json.dumps(entry, ensure_ascii=False) + sep)
        lines.append("  ]" + ("," if i < len(sections) - 1 else ""))
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def frames_in_domain(lex, domain):
    domain = Domain(domain)
    return [f for f in lex.frames if f.domain == domain]


def lu_for_lemma(lex, lemma_pos):
    """Exact, case-sensitive lookup; ``None`` when absent."""
    return lex.lu(lemma_pos)


def qualia_neighbors(lex, lu):
    """All ``(relation, partner LU)`` pairs in which ``lu`` takes part."""
    key = lu.lemma_pos if isinstance(lu, LexicalUnit) else lu
    if lex.lu(key) is None:
        raise UnknownLexicalUnit(f"unknown lexical unit {key!r}")
    out = []
    for q in lex.qualia_relations:
        if q.lu_a == key:
            out.append((q.relation, lex.lu(q.lu_b)))
        elif q.lu_b == key:
            out.append((q.relation, lex.lu(q.lu_a)))
    out.sort(key=lambda rel: (rel[0], rel[1].lemma_pos))
    return out


def default_lexicon_path():
    return Path(__file__).with_name("data") / "lexicon.json"


def load_default_lexicon():
    """The Healthcare/Violence fixture lexicon bundled with the package."""
    return load_lexicon(default_lexicon_path())
