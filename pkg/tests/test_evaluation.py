import datetime as dt
from types import SimpleNamespace

import numpy as np
import pytest

from framegbv.cohort import HealthRecord
from framegbv.errors import LengthMismatch, ShapeError, TooFewSamplesError
from framegbv.evaluation import (CvReport, DemographicPipeline, FoldMetrics,
                                 SemanticPipeline, chance_f1, cross_validate,
                                 feature_importance, precision_recall_f1, stratified_kfold)
from framegbv.featurize import FeatureRegistry, FeaturizerConfig
from framegbv.numeric import pca_fit


def test_kfold_exact():
    y = np.array([1] * 10 + [-1] * 10)
    for train, test in stratified_kfold(y, 5, seed=1):
        assert (y[test] == 1).sum() == 2 and (y[test] == -1).sum() == 2
        assert set(train) | set(test) == set(range(20))


def test_kfold_801_cases():
    y = np.array([1] * 167 + [-1] * 634)
    folds = stratified_kfold(y, 5, seed=0)
    pos = sorted(int((y[t] == 1).sum()) for _, t in folds)
    assert set(pos) <= {33, 34} and sum(pos) == 167
    tests = np.concatenate([t for _, t in folds])
    assert sorted(tests.tolist()) == list(range(801))
    sizes = [len(t) for _, t in folds]
    assert max(sizes) - min(sizes) <= 1
    for _, t in folds:
        assert abs((y[t] == 1).sum() - 167 / 5) < 1


def test_kfold_deterministic_and_errors():
    y = np.array([1] * 7 + [-1] * 13)
    a = stratified_kfold(y, 5, seed=4)
    b = stratified_kfold(y, 5, seed=4)
    assert all(np.array_equal(x[1], z[1]) for x, z in zip(a, b))
    with pytest.raises(TooFewSamplesError):
        stratified_kfold(np.array([1, 1, -1, -1, -1, -1, -1]), 5)


@pytest.mark.parametrize("yt,yp,expected", [
    ([1, -1, 1], [1, 1, 1], (2 / 3, 1.0, 0.8)),
    ([1, -1], [1, 1], (0.5, 1.0, 2 / 3)),
    ([1, -1, 1], [1, -1, 1], (1.0, 1.0, 1.0)),
    ([1, -1, 1], [-1, -1, -1], (0.0, 0.0, 0.0)),
])
def test_prf(yt, yp, expected):
    assert precision_recall_f1(yt, yp) == pytest.approx(expected)


def test_prf_length_mismatch():
    with pytest.raises(LengthMismatch):
        precision_recall_f1([1, 1], [1])


def test_report_mean_std_cell():
    f1s = [0.6, 0.7, 0.8, 0.9, 1.0]
    rep = CvReport("semantic", [FoldMetrics(i, 8, 2, 0, 0, 0, 0.5, 0.5, f)
                                for i, f in enumerate(f1s)])
    assert rep.mean("f1") == pytest.approx(0.8)
    # sample std by hand: sqrt(sum((x-0.8)^2) / 4) = sqrt(0.1 / 4)
    assert rep.std("f1") == pytest.approx((0.1 / 4) ** 0.5)
    assert rep.cell("f1") == "0.800 (0.158)"
    d = rep.to_dict()
    assert d["summary"]["f1"]["mean"] == pytest.approx(0.8) and len(d["folds"]) == 5


class Identical:
    """Every record maps to the same feature vector."""

    def __init__(self, n):
        self.n = n

    def __len__(self):
        return self.n

    def fit(self, idx):
        return None

    def transform(self, arts, idx):
        return np.ones((len(idx), 3))

    @staticmethod
    def digest(arts):
        return ""


def test_identical_features_give_zero_std():
    y = np.array([1] * 10 + [-1] * 40)
    rep = cross_validate(Identical(50), y, n_folds=5, seed=0)
    assert rep.std("f1") == 0.0
    assert len(set(rep.values("f1"))) == 1


def _counts(n, seed):
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) < n // 4, 1, -1)
    out = []
    for yi in y:
        c = {f"frame:F{j}": int(rng.poisson(2)) for j in range(6)}
        c["frame:Signal"] = int(rng.poisson(3 if yi > 0 else 0.3))
        out.append({k: v for k, v in c.items() if v})
    return out, y


def test_semantic_cv_is_deterministic_and_learns():
    counts, y = _counts(120, 0)
    cfg = FeaturizerConfig(frame_min_count=5, lu_min_count=5)
    a = cross_validate(SemanticPipeline(counts, cfg, 50), y, n_folds=5, seed=2)
    b = cross_validate(SemanticPipeline(counts, cfg, 50), y, n_folds=5, seed=2)
    assert a.to_dict() == b.to_dict()
    assert a.mean("f1") > chance_f1(0.25) + 0.2
    assert len({f.artifact_digest for f in a.folds}) == 5


def test_paper_faithful_shares_artifacts():
    counts, y = _counts(60, 1)
    cfg = FeaturizerConfig(frame_min_count=5, lu_min_count=5)
    rep = cross_validate(SemanticPipeline(counts, cfg, 50), y, n_folds=5, paper_faithful=True)
    assert rep.paper_faithful
    assert len({f.artifact_digest for f in rep.folds}) == 1


def test_demographic_pipeline():
    d = dt.date(2020, 1, 1)
    recs = [HealthRecord(str(i), "p", d, (), {"a": "x" if i % 2 else "y"}) for i in range(20)]
    y = np.array([1 if i % 2 else -1 for i in range(20)])
    rep = cross_validate(DemographicPipeline(recs, ["a"]), y, n_folds=5)
    assert rep.mean("f1") == pytest.approx(1.0)
    with pytest.raises(LengthMismatch):
        cross_validate(DemographicPipeline(recs, ["a"]), y[:-1])


def test_feature_importance_demographic():
    svm = SimpleNamespace(w=np.array([0.9, -0.1]))
    reg = FeatureRegistry(["cat:a=x", "cat:a=y"])
    assert feature_importance(svm, None, reg) == [(1, "cat:a=x", 0.9), (2, "cat:a=y", -0.1)]
    assert len(feature_importance(svm, None, reg, top_n=1)) == 1
    with pytest.raises(ShapeError):
        feature_importance(SimpleNamespace(w=np.ones(3)), None, reg)


def test_feature_importance_semantic_matches_dense_multiply():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(12, 8))
    pca = pca_fit(X, 5)
    w = rng.normal(size=5)
    reg = FeatureRegistry([f"frame:F{i}" for i in range(8)])
    ranked = feature_importance(SimpleNamespace(w=w), pca, reg, top_n=100)
    # independent: explicit sum over components
    scores = [sum(pca.components[j, c] * w[c] for c in range(5)) for j in range(8)]
    expected = sorted(range(8), key=lambda j: -abs(scores[j]))
    assert [k for _, k, _ in ranked] == [f"frame:F{j}" for j in expected]
    assert [s for _, _, s in ranked] == pytest.approx([scores[j] for j in expected])
    assert len(ranked) == 8


def test_chance_f1():
    assert chance_f1(0.2) == pytest.approx(1 / 3)
    assert chance_f1(1.0) == 1.0
