"""Sparse feature construction for the semantic, mixed and demographic setups.

Feature keys::

    frame:<Frame>                   one per annotation set
    fe:<Frame>.<FE>                 one per frame-element span
    lu:<lemma.pos>                  one per resolved annotation set
    co:<A.FEx|B.FEy>                cross-frame FE pairs in a sentence
    qualia:<rel>(<lu_a>,<lu_b>)     weighted qualia links between present LUs
    cat:<field>=<value>             one-hot demographic columns
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .annotation import fe_cooccurrences
from .errors import ConfigError, EmptyRegistryError, ParseError, ShapeError

KIND_ORDER = ("frame", "fe", "lu", "co", "qualia", "cat")
_QUALIA_RE = re.compile(r"^qualia:([^(]+)\((.+),(.+)\)$")
TFIDF_VARIANTS = ("smooth", "plain")


@dataclass(frozen=True)
class FeaturizerConfig:
    frame_min_count: int = 50
    lu_min_count: int = 25
    qualia_weight: float = 0.1
    tfidf: str = "smooth"
    include_parameterized: bool = False
    parameterized_mapping: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_min_count < 0 or self.lu_min_count < 0:
            raise ConfigError("minimum counts must be >= 0")
        if not 0 < self.qualia_weight <= 1:
            raise ConfigError("qualia_weight must lie in (0, 1]")
        if self.tfidf not in TFIDF_VARIANTS:
            raise ConfigError(f"tfidf variant must be one of {TFIDF_VARIANTS}")


# --- per-record counting ----------------------------------------------------------

def count_features(rec, lex, cfg=None):
    counts = Counter()
    for a in rec.annotation_sets:
        counts[f"frame:{a.frame}"] += 1
        for fe, _ in a.fe_spans:
            counts[f"fe:{a.frame}.{fe}"] += 1
        if a.lu is not None:
            counts[f"lu:{a.lu}"] += 1
    counts.update(fe_cooccurrences(rec, lex))
    return counts


def add_qualia_features(counts, lex, cfg=None):
    cfg = cfg or FeaturizerConfig()
    out = dict(counts)
    for q in lex.qualia_relations:
        ca = counts.get(f"lu:{q.lu_a}", 0)
        cb = counts.get(f"lu:{q.lu_b}", 0)
        if ca > 0 and cb > 0:
            key = f"qualia:{q.relation}({q.lu_a},{q.lu_b})"
            if key not in out:
                out[key] = cfg.qualia_weight * min(ca, cb)
    return out


@dataclass
class CoverageReport:
    mapped: Counter = field(default_factory=Counter)
    unmapped: Counter = field(default_factory=Counter)

    @property
    def n_unmapped(self):
        return sum(self.unmapped.values())


def map_parameterized(rec, cfg, coverage=None):
    """Pseudo-counts for structured fields that map onto the lexicon."""
    out = Counter()
    if not cfg.include_parameterized:
        return out
    for fname in sorted(rec.parameterized):
        value = rec.parameterized[fname]
        target = cfg.parameterized_mapping.get((fname, value))
        if target is None:
            if coverage is not None:
                coverage.unmapped[(fname, value)] += 1
            continue
        frame, lemma_pos = target
        out[f"frame:{frame}"] += 1
        out[f"lu:{lemma_pos}"] += 1
        if coverage is not None:
            coverage.mapped[(fname, value)] += 1
    return out


def record_counts(annotated, health_record, lex, cfg, coverage=None):
    """Full semantic count map for one record: text counts, mapped
    parameterized fields (summed in), then qualia links."""
    counts = count_features(annotated, lex, cfg) if annotated is not None else Counter()
    if cfg.include_parameterized and health_record is not None:
        counts.update(map_parameterized(health_record, cfg, coverage))
    return add_qualia_features(counts, lex, cfg)


def load_mapping(path, lex=None):
    """Read a ``field,value,frame,lemma_pos`` table."""
    mapping = {}
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            need = {"field", "value", "frame", "lemma_pos"}
            if not need <= set(reader.fieldnames or ()):
                raise ParseError(f"{path}: expected columns {sorted(need)}")
            for n, row in enumerate(reader, 2):
                if lex is not None:
                    lu = lex.lu(row["lemma_pos"])
                    if lu is None or lu.frame != row["frame"]:
                        raise ParseError(f"{path}:{n}: {row['lemma_pos']!r} does not "
                                         f"evoke {row['frame']!r} in the lexicon")
                mapping[(row["field"], row["value"])] = (row["frame"], row["lemma_pos"])
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return mapping


# --- registry ----------------------------------------------------------------

def key_kind(key):
    return key.split(":", 1)[0]


def key_dependencies(key):
    """(frames, lexical units) whose corpus totals gate this key."""
    kind, body = key.split(":", 1)
    if kind == "frame":
        return (body,), ()
    if kind == "fe":
        return (body.split(".", 1)[0],), ()
    if kind == "co":
        left, right = body.split("|", 1)
        return (left.split(".", 1)[0], right.split(".", 1)[0]), ()
    if kind == "lu":
        return (), (body,)
    if kind == "qualia":
        m = _QUALIA_RE.match(key)
        if not m:
            raise ValueError(f"malformed qualia key {key!r}")
        return (), (m.group(2), m.group(3))
    return (), ()


def _sort_key(key):
    return (KIND_ORDER.index(key_kind(key)), key)


class FeatureRegistry:
    """Frozen, ordered key -> column map."""

    def __init__(self, keys):
        keys = tuple(keys)
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate feature keys")
        self.keys = keys
        self.index = {k: i for i, k in enumerate(keys)}

    def __len__(self):
        return len(self.keys)

    def __contains__(self, key):
        return key in self.index

    def __eq__(self, other):
        return isinstance(other, FeatureRegistry) and self.keys == other.keys

    def __repr__(self):
        return f"FeatureRegistry({len(self.keys)} keys)"

    def vectorize(self, counts):
        pairs = sorted((self.index[k], float(v)) for k, v in counts.items()
                       if k in self.index and v != 0)
        return SparseVector(np.array([p[0] for p in pairs], dtype=np.int64),
                            np.array([p[1] for p in pairs], dtype=np.float64),
                            len(self.keys))

    def to_matrix(self, corpus):
        """CSR matrix with one row per count map."""
        rows, cols, vals = [], [], []
        for i, counts in enumerate(corpus):
            for k, v in counts.items():
                j = self.index.get(k)
                if j is not None and v != 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(float(v))
        m = sp.csr_matrix((vals, (rows, cols)), shape=(len(corpus), len(self.keys)),
                          dtype=np.float64)
        m.sort_indices()
        return m


def corpus_totals(corpus):
    totals = Counter()
    for counts in corpus:
        for k, v in counts.items():
            totals[k] += v
    return totals


def fit_registry(corpus, cfg=None):
    """Keep keys whose gating frames / LUs reach the minimum corpus totals."""
    cfg = cfg or FeaturizerConfig()
    corpus = list(corpus)
    if not corpus:
        raise EmptyRegistryError("cannot fit a registry on an empty corpus")
    totals = corpus_totals(corpus)
    kept = []
    for key in totals:
        frames, lus = key_dependencies(key)
        if any(totals.get(f"frame:{f}", 0) < cfg.frame_min_count for f in frames):
            continue
        if any(totals.get(f"lu:{u}", 0) < cfg.lu_min_count for u in lus):
            continue
        kept.append(key)
    if not kept:
        raise EmptyRegistryError("every feature was pruned")
    return FeatureRegistry(sorted(kept, key=_sort_key))


# --- sparse vectors and TF-IDF ------------------------------------------------

@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if len(idx) != len(self.values):
            raise ShapeError("indices and values differ in length")
        if len(idx) and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ShapeError("indices must be strictly increasing and < dim")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite value in sparse vector")

    def to_dense(self):
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True)
class TfidfModel:
    df: np.ndarray
    n_docs: int
    idf: np.ndarray
    variant: str = "smooth"


def _as_csr(vectors, dim=None):
    if sp.issparse(vectors):
        return sp.csr_matrix(vectors)
    vectors = list(vectors)
    if dim is None:
        dim = vectors[0].dim if vectors else 0
    rows = np.concatenate([np.full(len(v.indices), i) for i, v in enumerate(vectors)]
                          or [np.empty(0, dtype=np.int64)])
    cols = np.concatenate([v.indices for v in vectors] or [np.empty(0, dtype=np.int64)])
    vals = np.concatenate([v.values for v in vectors] or [np.empty(0)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(vectors), dim))


def tfidf_fit(vectors, registry=None, variant="smooth"):
    dim = len(registry) if registry is not None else None
    m = _as_csr(vectors, dim)
    if registry is not None and m.shape[1] != len(registry):
        raise ShapeError(f"matrix has {m.shape[1]} columns, registry {len(registry)}")
    n = m.shape[0]
    df = np.asarray((m != 0).sum(axis=0)).ravel().astype(np.int64)
    if variant == "smooth":
        idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    elif variant == "plain":
        with np.errstate(divide="ignore"):
            idf = np.where(df > 0, np.log(n / np.maximum(df, 1)) + 1.0, 1.0)
    else:
        raise ConfigError(f"unknown tfidf variant {variant!r}")
    return TfidfModel(df, n, idf, variant)


def _l1_rows(m):
    m = sp.csr_matrix(m, copy=True)
    norms = np.asarray(abs(m).sum(axis=1)).ravel()
    norms[norms == 0] = 1.0
    m = sp.diags(1.0 / norms) @ m
    return sp.csr_matrix(m)


def tfidf_transform(model, vector):
    """Weight one :class:`SparseVector` (or a whole CSR matrix) and L1-normalise."""
    if isinstance(vector, SparseVector):
        if vector.dim != len(model.idf):
            raise ShapeError(f"vector dim {vector.dim} != model dim {len(model.idf)}")
        vals = vector.values * model.idf[vector.indices]
        norm = np.abs(vals).sum()
        if norm > 0:
            vals = vals / norm
        return SparseVector(vector.indices.copy(), vals, vector.dim)
    m = sp.csr_matrix(vector)
    if m.shape[1] != len(model.idf):
        raise ShapeError(f"matrix has {m.shape[1]} columns, model {len(model.idf)}")
    return _l1_rows(m @ sp.diags(model.idf))


# --- one-hot demographics -------------------------------------------------------

class OneHotEncoder:
    """``cat:<field>=<value>`` columns, ordered by field then value."""

    def __init__(self, fields, values):
        self.fields = tuple(fields)
        self.values = {f: tuple(values[f]) for f in self.fields}
        self.registry = FeatureRegistry(
            f"cat:{f}={v}" for f in self.fields for v in self.values[f])
        self._col = {(f, v): self.registry.index[f"cat:{f}={v}"]
                     for f in self.fields for v in self.values[f]}

    def transform(self, records):
        X = np.zeros((len(records), len(self.registry)))
        for i, rec in enumerate(records):
            for f in self.fields:
                v = rec.parameterized.get(f)
                j = self._col.get((f, v))
                if j is not None:
                    X[i, j] = 1.0
        return X


def fit_one_hot(records, fields):
    if not fields:
        raise ConfigError("one-hot encoding needs at least one field")
    values = {f: sorted({r.parameterized[f] for r in records if f in r.parameterized})
              for f in fields}
    return OneHotEncoder(fields, values)


def one_hot_encode(records, fields):
    enc = fit_one_hot(records, fields)
    return enc.registry, enc.transform(records)


# --- export -----------------------------------------------------------------------

def write_triplets(matrix, path):
    """``row,col,value`` lines for every stored nonzero, row-major."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"# shape {m.shape[0]} {m.shape[1]}\n")
        for k in order:
            fh.write(f"{m.row[k]},{m.col[k]},{float(m.data[k])!r}\n")


def read_triplets(path):
    rows, cols, vals = [], [], []
    shape = None
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# shape"):
                _, _, r, c = line.split()
                shape = (int(r), int(c))
                continue
            r, c, v = line.strip().split(",")
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)


def write_registry(registry, path):
    Path(path).write_text("".join(k + "\n" for k in registry.keys), encoding="utf-8")


def read_registry(path):
    return FeatureRegistry(line for line in
                           Path(path).read_text(encoding="utf-8").splitlines() if line)
