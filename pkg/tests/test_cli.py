import json
import subprocess
import sys

import pytest

from framegbv.cli import main


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "generate", "--out", str(out), "--n-records", "200",
                 "--n-likely", "10"]) == 0
    return out


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_lexicon_validate(data, capsys, tmp_path):
    code, out, _ = run(["lexicon", "validate", str(data / "lexicon.json")], capsys)
    assert code == 0 and "22 frames" in out
    bad = tmp_path / "bad.json"
    bad.write_text('{"frames": [], "frame_elements": [], "qualia_relations": [], '
                   '"lexical_units": [{"lemma_pos": "x.n", "frame": "Nope"}]}',
                   encoding="utf-8")
    code, _, err = run(["lexicon", "validate", str(bad)], capsys)
    assert code == 1 and "IntegrityError" in err and "lexicon" in err
    code, _, _ = run(["lexicon", "validate", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_annotate_validate(data, capsys, fixtures_dir, tmp_path):
    code, out, _ = run(["annotate", "validate", str(fixtures_dir / "annotations_fixture.jsonl"),
                        "--lexicon", str(data / "lexicon.json")], capsys)
    assert code == 0 and "10/12 = 0.833" in out
    bad = tmp_path / "a.jsonl"
    bad.write_text(json.dumps({"record_id": "x", "sentences": [
        {"field": "plan", "index": 0, "text": "abc"}], "annotation_sets": [
        {"field": "plan", "index": 0, "target": [0, 9], "frame": "Fear"}]}) + "\n",
        encoding="utf-8")
    code, out, _ = run(["annotate", "validate", str(bad), "--lexicon",
                        str(data / "lexicon.json")], capsys)
    assert code == 1 and "SpanError" in out
    code, _, _ = run(["annotate", "validate", str(bad)], capsys)
    assert code == 2


def test_cohort_label(data, capsys, tmp_path):
    code, out, _ = run(["cohort", "label", "--data-dir", str(data),
                        "--out", str(tmp_path / "cases.csv")], capsys)
    assert code == 0
    assert "ExpertReview" in out and "dataset: before" in out
    assert (tmp_path / "cases.histogram.tsv").exists()


def test_missing_input_is_usage_error(tmp_path, capsys):
    code, _, err = run(["cohort", "label", "--data-dir", str(tmp_path),
                        "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 2


def test_bad_override_is_config_error(data, capsys, tmp_path):
    code, _, err = run(["cohort", "label", "--data-dir", str(data), "--set", "nope.x=1",
                        "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 1 and "ConfigError" in err


def test_anonymize_run(data, capsys, tmp_path):
    code, out, _ = run(["anonymize", "run", str(data / "annotations.jsonl"),
                        "--lexicon", str(data / "lexicon.json"),
                        "--patterns", str(data / "patterns.txt"),
                        "--gazetteer", str(data / "gazetteer.txt"),
                        "--out", str(tmp_path / "anon")], capsys)
    assert code == 0 and "redactions" in out
    for name in ("redacted.jsonl", "review.jsonl", "audit.jsonl"):
        assert (tmp_path / "anon" / name).exists()


def test_featurize_train_evaluate_patterns(data, capsys, tmp_path):
    common = ["--data-dir", str(data)]
    code, out, _ = run(["featurize", "--setup", "demographic", "--out",
                        str(tmp_path / "f")] + common, capsys)
    assert code == 0 and "features" in out
    code, _, _ = run(["train", "--setup", "semantic", "--out", str(tmp_path / "t"),
                      "--set", "featurize.frame_min_count=5",
                      "--set", "featurize.lu_min_count=5"] + common, capsys)
    assert code == 0 and (tmp_path / "t" / "pca.bin").exists()
    code, out, _ = run(["evaluate", "--setup", "demographic"] + common, capsys)
    assert code == 0 and out.startswith("Model\tF1\tRecall\tPrecision\nDemographic\t")
    code, out, _ = run(["patterns", "report", "--out", str(tmp_path / "p")] + common, capsys)
    assert code == 0 and "top_frames.tsv" in out


def test_run_mixed_without_mapping(data, capsys, tmp_path):
    args = ["run", "--setup", "mixed", "--out", str(tmp_path / "runs")]
    for key in ("lexicon", "annotations", "records", "notifications", "deaths"):
        args += [f"--{key}", str(data / {"lexicon": "lexicon.json",
                                         "annotations": "annotations.jsonl"}.get(
                                             key, f"{key}.csv"))]
    code, _, err = run(args, capsys)
    assert code == 2 and "mapping" in err


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "framegbv.cli", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "synth" in r.stdout
    r = subprocess.run([sys.executable, "-m", "framegbv.cli", "bogus"],
                       capture_output=True, text=True)
    assert r.returncode == 2
