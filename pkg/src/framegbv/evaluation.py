"""Stratified cross-validation, precision/recall/F1, and feature importance.

Feature pipelines expose ``fit(indices) -> artifacts`` and
``transform(artifacts, indices) -> matrix``.  By default every fold fits
its artifacts (registry, TF-IDF, PCA, one-hot levels) on the training
indices only.  With ``paper_faithful=True`` they are fitted once on the
whole dataset and only the classifier is refitted per fold.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numeric
from .errors import LengthMismatch, ShapeError, TooFewSamplesError
from .featurize import (FeaturizerConfig, fit_one_hot, fit_registry, tfidf_fit,
                        tfidf_transform)
from .svm import TrainConfig, svm_predict, svm_train

METRICS = ("f1", "recall", "precision")


def stratified_kfold(y, k=5, seed=0):
    """Folds as ``(train_idx, test_idx)`` pairs.

    Each class is shuffled with the seeded generator and dealt round-robin,
    so per-fold class counts differ by at most one.  Remainders of the
    second class continue where the first class left off, which keeps fold
    sizes balanced too.
    """
    y = np.asarray(y)
    classes = np.unique(y)
    for c in classes:
        if np.sum(y == c) < k:
            raise TooFewSamplesError(f"class {c!r} has {np.sum(y == c)} members, "
                                     f"fewer than k={k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in classes:
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        fold_of[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    all_idx = np.arange(len(y))
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


def confusion(y_true, y_pred, positive=1):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    tp = int(np.sum((y_pred == positive) & (y_true == positive)))
    fp = int(np.sum((y_pred == positive) & (y_true != positive)))
    fn = int(np.sum((y_pred != positive) & (y_true == positive)))
    return tp, fp, fn


def precision_recall_f1(y_true, y_pred, positive=1):
    tp, fp, fn = confusion(y_true, y_pred, positive)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    n_train: int
    n_test: int
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    artifact_digest: str = ""


@dataclass
class CvReport:
    setup: str
    folds: list = field(default_factory=list)
    paper_faithful: bool = False

    def values(self, metric):
        return np.array([getattr(f, metric) for f in self.folds])

    def mean(self, metric):
        return float(np.mean(self.values(metric)))

    def std(self, metric):
        """Sample standard deviation (ddof=1) across folds."""
        v = self.values(metric)
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    def cell(self, metric):
        return f"{self.mean(metric):.3f} ({self.std(metric):.3f})"

    def to_dict(self):
        return {
            "setup": self.setup,
            "paper_faithful": self.paper_faithful,
            "folds": [f.__dict__ for f in self.folds],
            "summary": {m: {"mean": self.mean(m), "std": self.std(m)} for m in METRICS},
        }


# --- feature pipelines --------------------------------------------------------

@dataclass(frozen=True)
class SemanticArtifacts:
    registry: object
    tfidf: object
    pca: object


class SemanticPipeline:
    """Registry pruning, TF-IDF + L1, then PCA, over per-record count maps.

    Serves both the semantic and the mixed setup; they differ only in the
    count maps handed in.
    """

    def __init__(self, counts, cfg=None, n_components=2000):
        self.counts = list(counts)
        self.cfg = cfg or FeaturizerConfig()
        self.n_components = n_components

    def __len__(self):
        return len(self.counts)

    def fit(self, indices):
        corpus = [self.counts[i] for i in indices]
        registry = fit_registry(corpus, self.cfg)
        raw = registry.to_matrix(corpus)
        tfidf = tfidf_fit(raw, registry, self.cfg.tfidf)
        weighted = tfidf_transform(tfidf, raw)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            pca = numeric.pca_fit(weighted, self.n_components)
        return SemanticArtifacts(registry, tfidf, pca)

    def weighted(self, artifacts, indices):
        raw = artifacts.registry.to_matrix([self.counts[i] for i in indices])
        return tfidf_transform(artifacts.tfidf, raw)

    def transform(self, artifacts, indices):
        return numeric.pca_transform(artifacts.pca, self.weighted(artifacts, indices))

    @staticmethod
    def digest(artifacts):
        h = hashlib.sha256()
        h.update("\n".join(artifacts.registry.keys).encode("utf-8"))
        h.update(np.ascontiguousarray(artifacts.tfidf.df, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(artifacts.tfidf.idf, dtype="<f8").tobytes())
        h.update(numeric.pca_to_bytes(artifacts.pca))
        return h.hexdigest()

    @staticmethod
    def feature_keys(artifacts):
        return artifacts.registry.keys


class DemographicPipeline:
    """One-hot encoding of parameterized fields, used without reduction."""

    def __init__(self, records, fields):
        self.records = list(records)
        self.fields = tuple(fields)

    def __len__(self):
        return len(self.records)

    def fit(self, indices):
        return fit_one_hot([self.records[i] for i in indices], self.fields)

    def transform(self, artifacts, indices):
        return artifacts.transform([self.records[i] for i in indices])

    @staticmethod
    def digest(artifacts):
        return hashlib.sha256("\n".join(artifacts.registry.keys).encode("utf-8")).hexdigest()

    @staticmethod
    def feature_keys(artifacts):
        return artifacts.registry.keys


def cross_validate(pipeline, y, train_cfg=None, n_folds=5, seed=0,
                   paper_faithful=False, setup="semantic"):
    train_cfg = train_cfg or TrainConfig(seed=seed)
    y = np.asarray(y)
    if len(y) != len(pipeline):
        raise LengthMismatch(f"{len(y)} labels for {len(pipeline)} records")
    folds = stratified_kfold(y, n_folds, seed)
    shared = pipeline.fit(np.arange(len(y))) if paper_faithful else None
    report = CvReport(setup=setup, paper_faithful=paper_faithful)
    for f, (train, test) in enumerate(folds):
        arts = shared if paper_faithful else pipeline.fit(train)
        Xtr = pipeline.transform(arts, train)
        Xte = pipeline.transform(arts, test)
        model = svm_train(Xtr, y[train], train_cfg)
        pred = svm_predict(model, Xte)
        tp, fp, fn = confusion(y[test], pred)
        p, r, f1 = precision_recall_f1(y[test], pred)
        report.folds.append(FoldMetrics(f, len(train), len(test), tp, fp, fn, p, r, f1,
                                        pipeline.digest(arts)))
    return report


def feature_importance(svm, pca, registry, top_n=35):
    """Rank original-space features by |score|, keeping the sign.

    With a PCA model the SVM weights are mapped back through the components;
    without one they are used as they are.
    """
    keys = registry.keys if hasattr(registry, "keys") else tuple(registry)
    if pca is not None:
        scores = numeric.back_project(pca, svm.w)
    else:
        scores = np.asarray(svm.w, dtype=np.float64)
    if len(scores) != len(keys):
        raise ShapeError(f"{len(scores)} scores for {len(keys)} registry keys")
    order = sorted(range(len(keys)), key=lambda j: (-abs(scores[j]), keys[j]))
    return [(rank + 1, keys[j], float(scores[j]))
            for rank, j in enumerate(order[:top_n])]


def chance_f1(positive_rate):
    """F1 of predicting every record positive: the ceiling for label-blind
    classifiers."""
    return 2 * positive_rate / (1 + positive_rate)
