"""Experiment orchestration: config layering, input loading, the three
setups, and reproducible run directories.

A run directory is named after a digest of the effective config and the
input file digests; every file in it is a pure function of those, so a
rerun reproduces it byte for byte.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, numeric
from .annotation import parse_annotations, resolve_corpus
from .cohort import (DatasetConfig, Label, LabelConfig, apply_expert_review,
                     build_dataset, label_records, load_deaths, load_notifications,
                     load_overrides, load_records, provenance_histogram)
from .errors import ConfigError
from .evaluation import (DemographicPipeline, SemanticPipeline, cross_validate,
                         feature_importance)
from .featurize import CoverageReport, FeaturizerConfig, load_mapping, record_counts
from .lexicon import load_lexicon
from .patterns import pattern_report, write_pattern_tables
from .svm import TrainConfig, svm_train

SETUPS = ("semantic", "mixed", "demographic")
TABLE_NAMES = {"semantic": "Semantic", "mixed": "Mixed", "demographic": "Demographic"}

DEFAULT_CONFIG = {
    "seed": 42,
    "label": {
        "aggression_icd": ["X85-Y09"],
        "non_violence_icd": ["U07.1", "U07.2", "Q20-Q28", "Q35-Q37"],
        "violence_window_days": 2,
        "likely_window_days": 30,
    },
    "dataset": {"max_majority_ratio": 4.0},
    "featurize": {
        "frame_min_count": 50,
        "lu_min_count": 25,
        "qualia_weight": 0.1,
        "tfidf": "smooth",
    },
    "demographic_fields": None,
    "pca": {"n_components": 2000},
    "train": {"C": 1.0, "class_weight": "balanced", "tol": 1e-4, "max_epochs": 1000},
    "cv": {"n_folds": 5, "paper_faithful": False},
    "importance": {"top_n": 35},
    "patterns": {"top_frames": 15, "top_lus": 20,
                 "drilldown_frame": "Health_conditions", "drilldown_n": 30},
    "anonymize": {"fuzzy_threshold": 0.85, "max_name_freq": 5},
}

INPUT_FILES = {
    "lexicon": "lexicon.json",
    "annotations": "annotations.jsonl",
    "records": "records.csv",
    "notifications": "notifications.csv",
    "deaths": "deaths.csv",
    "mapping": "mapping.csv",
    "overrides": "expert_review.csv",
    "gazetteer": "gazetteer.txt",
    "patterns": "patterns.txt",
}


# --- config -----------------------------------------------------------------------

def _merge(base, layer, path=""):
    for key, value in layer.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    layer = cur = {}
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = value
    return layer


def load_config(path=None, overrides=()):
    """Defaults, then the JSON file at ``path``, then ``key.sub=value`` items."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            layer = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        _merge(cfg, layer)
    for item in overrides:
        _merge(cfg, _parse_override(item))
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    label_config(cfg)
    dataset_config(cfg)
    featurizer_config(cfg)
    train_config(cfg)
    if int(cfg["pca"]["n_components"]) < 1:
        raise ConfigError("pca.n_components must be >= 1")
    if int(cfg["cv"]["n_folds"]) < 2:
        raise ConfigError("cv.n_folds must be >= 2")


def config_hash(cfg):
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def label_config(cfg):
    c = cfg["label"]
    return LabelConfig(tuple(c["aggression_icd"]), tuple(c["non_violence_icd"]),
                       int(c["violence_window_days"]), int(c["likely_window_days"]))


def dataset_config(cfg):
    return DatasetConfig(float(cfg["dataset"]["max_majority_ratio"]))


def featurizer_config(cfg, mapping=None):
    c = cfg["featurize"]
    return FeaturizerConfig(int(c["frame_min_count"]), int(c["lu_min_count"]),
                            float(c["qualia_weight"]), c["tfidf"],
                            include_parameterized=mapping is not None,
                            parameterized_mapping=mapping or {})


def train_config(cfg):
    c = cfg["train"]
    return TrainConfig(float(c["C"]), c["class_weight"], float(c["tol"]),
                       int(c["max_epochs"]), int(cfg["seed"]))


# --- inputs -----------------------------------------------------------------------

def resolve_paths(data_dir=None, **explicit):
    """Explicit paths win; the rest default to standard names in ``data_dir``."""
    paths = {}
    for key, name in INPUT_FILES.items():
        if explicit.get(key):
            paths[key] = Path(explicit[key])
        elif data_dir is not None and (Path(data_dir) / name).exists():
            paths[key] = Path(data_dir) / name
    return paths


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class Inputs:
    lexicon: object
    annotations: dict           # record_id -> resolved AnnotatedRecord
    records: list
    notifications: list
    deaths: list
    mapping: dict | None
    overrides: list
    resolution: object
    digests: dict = field(default_factory=dict)


def load_inputs(paths):
    for key in ("lexicon", "annotations", "records", "notifications", "deaths"):
        if key not in paths:
            raise ConfigError(f"missing input: {key}")
    lex = load_lexicon(paths["lexicon"])
    annotated, report = resolve_corpus(parse_annotations(paths["annotations"], lex), lex)
    mapping = load_mapping(paths["mapping"], lex) if "mapping" in paths else None
    overrides = load_overrides(paths["overrides"]) if "overrides" in paths else []
    digests = {k: file_digest(p) for k, p in sorted(paths.items())
               if k not in ("gazetteer", "patterns")}
    return Inputs(lex, {r.record_id: r for r in annotated}, load_records(paths["records"]),
                  load_notifications(paths["notifications"]), load_deaths(paths["deaths"]),
                  mapping, overrides, report, digests)


def labeled_cases(inputs, cfg):
    cases = label_records(inputs.records, inputs.notifications, inputs.deaths,
                          label_config(cfg))
    if inputs.overrides:
        cases = apply_expert_review(cases, inputs.overrides)
    return cases


def demographic_fields(cfg, records):
    if cfg.get("demographic_fields"):
        return tuple(cfg["demographic_fields"])
    seen = []
    for r in records:
        for f in r.parameterized:
            if f not in seen:
                seen.append(f)
    return tuple(seen)


def build_pipeline(setup, dataset, inputs, cfg):
    records = [c.record for c in dataset.cases]
    if setup == "demographic":
        return DemographicPipeline(records, demographic_fields(cfg, inputs.records)), None
    if setup == "mixed" and inputs.mapping is None:
        raise ConfigError("the mixed setup needs a parameterized mapping table")
    fcfg = featurizer_config(cfg, inputs.mapping if setup == "mixed" else None)
    coverage = CoverageReport()
    counts = [record_counts(inputs.annotations.get(r.record_id), r, inputs.lexicon, fcfg,
                            coverage)
              for r in records]
    return SemanticPipeline(counts, fcfg, int(cfg["pca"]["n_components"])), coverage


# --- experiment -------------------------------------------------------------------

@dataclass
class SetupResult:
    setup: str
    report: object
    importance: list
    explained_variance: float | None = None
    n_features: int = 0
    coverage: object = None


def fit_final(pipeline, y, cfg):
    """Fit artifacts and classifier on the whole dataset."""
    idx = np.arange(len(y))
    arts = pipeline.fit(idx)
    X = pipeline.transform(arts, idx)
    model = svm_train(X, y, train_config(cfg))
    return arts, model


def run_setup(setup, dataset, inputs, cfg):
    if setup not in SETUPS:
        raise ConfigError(f"unknown setup {setup!r}")
    pipeline, coverage = build_pipeline(setup, dataset, inputs, cfg)
    y = dataset.y
    report = cross_validate(pipeline, y, train_config(cfg), int(cfg["cv"]["n_folds"]),
                            int(cfg["seed"]), bool(cfg["cv"]["paper_faithful"]), setup)
    arts, model = fit_final(pipeline, y, cfg)
    top_n = int(cfg["importance"]["top_n"])
    if setup == "demographic":
        imp = feature_importance(model, None, arts.registry, top_n)
        return SetupResult(setup, report, imp, None, len(arts.registry), coverage)
    imp = feature_importance(model, arts.pca, arts.registry, top_n)
    ratios, cum = numeric.explained_variance_ratio(arts.pca)
    return SetupResult(setup, report, imp, float(cum[-1]) if len(cum) else 0.0,
                       len(arts.registry), coverage)


def _fmt(x):
    return f"{x:.6f}"


def write_table1(results, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["Model", "F1", "Recall", "Precision"])
        for r in results:
            w.writerow([TABLE_NAMES[r.setup]] + [r.report.cell(m)
                                                 for m in ("f1", "recall", "precision")])


def write_folds(results, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["setup", "fold", "n_train", "n_test", "tp", "fp", "fn",
                    "precision", "recall", "f1", "artifact_digest"])
        for r in results:
            for f in r.report.folds:
                w.writerow([r.setup, f.fold, f.n_train, f.n_test, f.tp, f.fp, f.fn,
                            _fmt(f.precision), _fmt(f.recall), _fmt(f.f1),
                            f.artifact_digest])


def write_importance(result, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["rank", "key", "score"])
        for rank, key, score in result.importance:
            w.writerow([rank, key, f"{score:.10g}"])


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)
                          + "\n", encoding="utf-8")


@dataclass
class RunOutput:
    run_dir: Path
    results: list
    manifest: dict


def run_experiment(setups, paths, cfg, out_root):
    """Run the requested setups and write a reproducible run directory."""
    setups = tuple(setups)
    for s in setups:
        if s not in SETUPS:
            raise ConfigError(f"unknown setup {s!r}")
    inputs = load_inputs(paths)
    chash = config_hash(cfg)
    run_key = hashlib.sha256(json.dumps(
        {"config": chash, "inputs": inputs.digests, "setups": list(setups)},
        sort_keys=True).encode()).hexdigest()
    run_dir = Path(out_root) / f"run-{run_key[:12]}"
    run_dir.mkdir(parents=True, exist_ok=True)

    cases = labeled_cases(inputs, cfg)
    dataset = build_dataset(cases, dataset_config(cfg), int(cfg["seed"]))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        results = [run_setup(s, dataset, inputs, cfg) for s in setups]

    outputs = []
    write_table1(results, run_dir / "table1.tsv")
    write_folds(results, run_dir / "folds.tsv")
    outputs += ["table1.tsv", "folds.tsv"]
    _dump_json({r.setup: dict(r.report.to_dict(),
                              n_features=r.n_features,
                              explained_variance=r.explained_variance)
                for r in results}, run_dir / "cv_report.json")
    outputs.append("cv_report.json")
    for r in results:
        name = f"importance_{r.setup}.tsv"
        write_importance(r, run_dir / name)
        outputs.append(name)

    pc = cfg["patterns"]
    violent = [inputs.annotations[c.record_id] for c in cases
               if c.label == Label.VIOLENCE and c.record_id in inputs.annotations]
    preport = pattern_report(violent, inputs.lexicon, int(pc["top_frames"]),
                             int(pc["top_lus"]), pc["drilldown_frame"],
                             int(pc["drilldown_n"]))
    for p in write_pattern_tables(preport, run_dir / "patterns"):
        outputs.append(str(p.relative_to(run_dir)))

    hist = provenance_histogram(cases)
    _dump_json({
        "labels": {f"{lab}/{prov}": n for (lab, prov), n in sorted(hist.items())},
        "dataset_before": dataset.counts_before,
        "dataset_after": dataset.counts_after,
        "lu_resolution": {"total": inputs.resolution.total,
                          "resolved": inputs.resolution.resolved,
                          "rate": inputs.resolution.rate},
    }, run_dir / "cohort.json")
    outputs.append("cohort.json")

    manifest = {
        "config_hash": chash,
        "config": cfg,
        "setups": list(setups),
        "seeds": {"global": int(cfg["seed"])},
        "inputs": inputs.digests,
        "versions": {"framegbv": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "outputs": {name: file_digest(run_dir / name) for name in sorted(outputs)},
    }
    _dump_json(manifest, run_dir / "manifest.json")
    return RunOutput(run_dir, results, manifest)
