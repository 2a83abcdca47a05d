"""Command-line entry point.

Exit codes: 0 success, 1 data or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
import warnings
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

from . import anonymize, numeric, pipeline, synth
from .annotation import parse_annotations, resolve_corpus, validate_annotations
from .cohort import Label, build_dataset, provenance_histogram, write_labeled_cases
from .errors import FrameGBVError
from .evaluation import cross_validate, feature_importance
from .featurize import write_registry, write_triplets
from .lexicon import load_lexicon
from .patterns import pattern_report, write_pattern_tables


class UsageError(Exception):
    pass


def _existing(path):
    p = Path(path)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return p


def _add_data_args(p, need=("lexicon", "annotations", "records", "notifications",
                            "deaths")):
    p.add_argument("--data-dir", type=_existing,
                   help="directory holding inputs under their standard names")
    for key in pipeline.INPUT_FILES:
        p.add_argument(f"--{key}", type=_existing, default=None)
    p.add_argument("--config", type=_existing, default=None, help="JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="config override, e.g. train.C=0.5 (repeatable)")
    p.set_defaults(_need=need)


def _paths(args):
    explicit = {k: getattr(args, k, None) for k in pipeline.INPUT_FILES}
    paths = pipeline.resolve_paths(args.data_dir, **explicit)
    missing = [k for k in args._need if k not in paths]
    if missing:
        raise UsageError("missing input path(s): " + ", ".join(f"--{m}" for m in missing))
    return paths


def _config(args):
    return pipeline.load_config(args.config, args.set)


def _tsv(rows, header, out=None):
    w = csv.writer(out or sys.stdout, delimiter="\t", lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


# --- commands ---------------------------------------------------------------------

def cmd_lexicon_validate(args):
    lex = load_lexicon(args.path)
    f, fe, lu, q = lex.counts()
    print(f"ok: {f} frames, {fe} frame elements, {lu} lexical units, {q} qualia relations")
    return 0


def cmd_annotate_validate(args):
    lex = load_lexicon(args.lexicon)
    problems = validate_annotations(args.path, lex)
    if problems:
        _tsv([["" if v is None else v for v in row] for row in problems],
             ["line", "record_id", "sentence_index", "error", "message"])
        return 1
    records, report = resolve_corpus(parse_annotations(args.path, lex), lex)
    n_sets = sum(len(r.annotation_sets) for r in records)
    print(f"ok: {len(records)} records, {n_sets} annotation sets, "
          f"LU resolution {report.resolved}/{report.total} = {report.rate:.3f}")
    return 0


def cmd_anonymize_run(args):
    lex = load_lexicon(args.lexicon) if args.lexicon else None
    records = parse_annotations(args.path, lex) if lex else None
    if records is None:
        raise UsageError("anonymize run needs --lexicon to read the annotation file")
    cfg = _config(args)
    acfg = anonymize.AnonymizeConfig(float(cfg["anonymize"]["fuzzy_threshold"]),
                                     int(cfg["anonymize"]["max_name_freq"]))
    patterns = (anonymize.load_patterns(args.patterns) if args.patterns
                else anonymize.default_patterns())
    gaz = anonymize.load_gazetteer(args.gazetteer) if args.gazetteer else None
    external = anonymize.load_external_matches(args.external) if args.external else ()
    sentences = [s for r in records for s in r.sentences]
    redacted, audit, review = anonymize.anonymize_corpus(sentences, patterns, gaz, lex,
                                                         acfg, external)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "redacted.jsonl").open("w", encoding="utf-8") as fh:
        for row in redacted:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    with (out / "review.jsonl").open("w", encoding="utf-8") as fh:
        for m in review:
            fh.write(json.dumps(anonymize.match_to_dict(m), ensure_ascii=False) + "\n")
    with (out / "audit.jsonl").open("w", encoding="utf-8") as fh:
        for entry in audit:
            fh.write(json.dumps(entry.to_dict(), ensure_ascii=False) + "\n")
    n_red = sum(len(a.redactions) for a in audit)
    print(f"{len(redacted)} sentences, {n_red} redactions, {len(review)} flagged for review")
    return 0


def cmd_cohort_label(args):
    cfg = _config(args)
    paths = _paths(args)
    inputs = pipeline.load_inputs(paths)
    cases = pipeline.labeled_cases(inputs, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_labeled_cases(cases, out)
    hist = provenance_histogram(cases)
    rows = [[lab, prov, n] for (lab, prov), n in sorted(hist.items())]
    with out.with_suffix(".histogram.tsv").open("w", encoding="utf-8") as fh:
        _tsv(rows, ["label", "provenance", "count"], fh)
    _tsv(rows, ["label", "provenance", "count"])
    dataset = build_dataset(cases, pipeline.dataset_config(cfg), int(cfg["seed"]))
    print(f"dataset: before {dataset.counts_before}, after {dataset.counts_after}")
    return 0


def cmd_synth_generate(args):
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    names = {f.name for f in dc_fields(synth.SynthConfig)}
    for key in names:
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    unknown = set(base) - names
    if unknown:
        raise UsageError(f"unknown synth config keys: {sorted(unknown)}")
    cfg = synth.SynthConfig(**base)
    corpus = synth.generate_corpus(cfg)
    paths = synth.write_corpus(corpus, args.out)
    print(f"wrote {len(corpus.records)} records to {args.out} "
          f"({sum(1 for v in corpus.ground_truth.values() if v.value == 'Violence')} "
          f"violence)")
    for name in sorted(paths):
        print(f"  {name}: {paths[name]}")
    return 0


def _prepare(args):
    cfg = _config(args)
    inputs = pipeline.load_inputs(_paths(args))
    cases = pipeline.labeled_cases(inputs, cfg)
    dataset = build_dataset(cases, pipeline.dataset_config(cfg), int(cfg["seed"]))
    return cfg, inputs, cases, dataset


def cmd_featurize(args):
    cfg, inputs, _, dataset = _prepare(args)
    pipe, _ = pipeline.build_pipeline(args.setup, dataset, inputs, cfg)
    idx = np.arange(len(dataset.cases))
    arts = pipe.fit(idx)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.setup == "demographic":
        matrix = arts.transform(pipe.records)
    else:
        matrix = pipe.weighted(arts, idx)
    write_triplets(matrix, out / "features.triplets")
    write_registry(arts.registry, out / "registry.txt")
    with (out / "rows.tsv").open("w", encoding="utf-8") as fh:
        _tsv([[i, c.record_id, c.label.value] for i, c in enumerate(dataset.cases)],
             ["row", "record_id", "label"], fh)
    print(f"{args.setup}: {matrix.shape[0]} rows x {matrix.shape[1]} features -> {out}")
    return 0


def cmd_train(args):
    cfg, inputs, _, dataset = _prepare(args)
    pipe, _ = pipeline.build_pipeline(args.setup, dataset, inputs, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        arts, model = pipeline.fit_final(pipe, dataset.y, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pca = getattr(arts, "pca", None)
    if pca is not None:
        numeric.save_pca(pca, out / "pca.bin")
    (out / "svm.json").write_text(json.dumps(
        {"setup": args.setup, "w": [float(v) for v in model.w], "b": float(model.b),
         "n_iter": model.n_iter, "converged": model.converged,
         "config": cfg["train"]}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_registry(arts.registry, out / "registry.txt")
    imp = feature_importance(model, pca, arts.registry, int(cfg["importance"]["top_n"]))
    with (out / "importance.tsv").open("w", encoding="utf-8") as fh:
        _tsv([[r, k, f"{s:.10g}"] for r, k, s in imp], ["rank", "key", "score"], fh)
    print(f"trained {args.setup} model on {len(dataset.cases)} cases -> {out}")
    return 0


def cmd_evaluate(args):
    cfg, inputs, _, dataset = _prepare(args)
    if args.paper_faithful:
        cfg["cv"]["paper_faithful"] = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pipe, _ = pipeline.build_pipeline(args.setup, dataset, inputs, cfg)
        report = cross_validate(pipe, dataset.y, pipeline.train_config(cfg),
                                int(cfg["cv"]["n_folds"]), int(cfg["seed"]),
                                bool(cfg["cv"]["paper_faithful"]), args.setup)
    _tsv([[pipeline.TABLE_NAMES[args.setup]] +
          [report.cell(m) for m in ("f1", "recall", "precision")]],
         ["Model", "F1", "Recall", "Precision"])
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                                  + "\n", encoding="utf-8")
    return 0


def cmd_patterns_report(args):
    cfg, inputs, cases, _ = _prepare(args)
    violent = [inputs.annotations[c.record_id] for c in cases
               if c.label == Label.VIOLENCE and c.record_id in inputs.annotations]
    pc = cfg["patterns"]
    report = pattern_report(violent, inputs.lexicon, int(pc["top_frames"]),
                            int(pc["top_lus"]), pc["drilldown_frame"],
                            int(pc["drilldown_n"]))
    for p in write_pattern_tables(report, args.out):
        print(p)
    return 0


def cmd_run(args):
    cfg = _config(args)
    if args.paper_faithful:
        cfg["cv"]["paper_faithful"] = True
    setups = pipeline.SETUPS if args.all else (args.setup,)
    paths = _paths(args)
    if "mixed" in setups and "mapping" not in paths:
        raise UsageError("the mixed setup needs --mapping")
    out = pipeline.run_experiment(setups, paths, cfg, args.out)
    print((out.run_dir / "table1.tsv").read_text(encoding="utf-8"), end="")
    print(f"run directory: {out.run_dir}")
    return 0


# --- parser -----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="framegbv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    lex = sub.add_parser("lexicon").add_subparsers(dest="action", required=True)
    p = lex.add_parser("validate", help="check a lexicon file")
    p.add_argument("path", type=_existing)
    p.set_defaults(func=cmd_lexicon_validate)

    ann = sub.add_parser("annotate").add_subparsers(dest="action", required=True)
    p = ann.add_parser("validate", help="check an annotation file against a lexicon")
    p.add_argument("path", type=_existing)
    p.add_argument("--lexicon", type=_existing, required=True)
    p.set_defaults(func=cmd_annotate_validate)

    an = sub.add_parser("anonymize").add_subparsers(dest="action", required=True)
    p = an.add_parser("run", help="scrub PII from annotation-file sentences")
    p.add_argument("path", type=_existing)
    p.add_argument("--lexicon", type=_existing, required=True)
    p.add_argument("--patterns", type=_existing)
    p.add_argument("--gazetteer", type=_existing)
    p.add_argument("--external", type=_existing, help="JSON Lines of external matches")
    p.add_argument("--config", type=_existing)
    p.add_argument("--set", action="append", default=[])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_anonymize_run)

    co = sub.add_parser("cohort").add_subparsers(dest="action", required=True)
    p = co.add_parser("label", help="label records and print the provenance histogram")
    _add_data_args(p, need=("lexicon", "annotations", "records", "notifications",
                            "deaths"))
    p.add_argument("--out", required=True, help="labelled-cases CSV")
    p.set_defaults(func=cmd_cohort_label)

    sy = sub.add_parser("synth").add_subparsers(dest="action", required=True)
    p = sy.add_parser("generate", help="write a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", type=_existing, help="JSON SynthConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-records", dest="n_records", type=int)
    p.add_argument("--violence-fraction", dest="violence_fraction", type=float)
    p.add_argument("--signal-strength", dest="signal_strength", type=float)
    p.add_argument("--demographic-informativeness", dest="demographic_informativeness",
                   type=float)
    p.add_argument("--n-likely", dest="n_likely", type=int)
    p.set_defaults(func=cmd_synth_generate)

    for name, func, helptext in (("featurize", cmd_featurize, "export feature matrices"),
                                 ("train", cmd_train, "fit the final model"),
                                 ("evaluate", cmd_evaluate, "cross-validate one setup")):
        p = sub.add_parser(name, help=helptext)
        _add_data_args(p)
        p.add_argument("--setup", choices=pipeline.SETUPS, required=True)
        p.add_argument("--out", required=name != "evaluate")
        if name == "evaluate":
            p.add_argument("--paper-faithful", action="store_true")
        p.set_defaults(func=func)

    pa = sub.add_parser("patterns").add_subparsers(dest="action", required=True)
    p = pa.add_parser("report", help="frame / LU frequency tables for Violence records")
    _add_data_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_patterns_report)

    p = sub.add_parser("run", help="full experiment into a run directory")
    _add_data_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--setup", choices=pipeline.SETUPS)
    g.add_argument("--all", action="store_true")
    p.add_argument("--paper-faithful", action="store_true")
    p.add_argument("--out", required=True, help="root for run directories")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"framegbv: error: {exc}", file=sys.stderr)
        return 2
    except FrameGBVError as exc:
        origin = Path(traceback.extract_tb(exc.__traceback__)[-1].filename).stem
        print(f"framegbv: {origin}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
