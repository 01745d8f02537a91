import json

import pandas as pd
import pytest

from src.cli import main
from src.evaluation import ConfusionMatrix, materialize

FEATURES = "gpa,attendance,quiz,assignment,discussion,lab"
TABLE_COUNTS = ((210, 1, 1), (3, 108, 1), (4, 6, 166))


def _manifest(out, command):
    return json.loads((out / f"{command}_manifest.json").read_text())


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """synth -> clean -> cluster once, shared by the read-only tests below."""
    out = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(out)]) == 0
    assert main(["clean", "--in", str(out / "cohort_raw.csv"), "--out", str(out)]) == 0
    assert main(["cluster", "--in", str(out / "cohort_clean.csv"), "--features", FEATURES, "--out", str(out)]) == 0
    return out


# --------------------------- synth -------------------------------------------
def test_synth_writes_the_default_cohort(workdir):
    frame = pd.read_csv(workdir / "cohort_raw.csv")
    assert len(frame) == 660
    manifest = _manifest(workdir, "synth")
    assert manifest["outputs"] == ["cohort_raw.csv"]
    assert manifest["counts"] == {"records": 660, "missing_cells": 160}
    assert manifest["seed"] == 42


def test_synth_is_repeatable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--seed", "3", "--out", str(a)]) == 0
    assert main(["synth", "--seed", "3", "--out", str(b)]) == 0
    assert (a / "cohort_raw.csv").read_bytes() == (b / "cohort_raw.csv").read_bytes()
    assert (a / "synth_manifest.json").read_bytes() == (b / "synth_manifest.json").read_bytes()


def test_missing_config_exits_2(tmp_path, capsys):
    code = main(["synth", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error code=config_not_found exit=2 message=")
    assert "\n" not in err


def test_negative_seed_exits_2(tmp_path):
    assert main(["synth", "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_config_with_invalid_utf8_exits_2(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_bytes(b'{"seed": "\xff\xfe"}')
    assert main(["synth", "--config", str(config), "--out", str(tmp_path)]) == 2
    assert "code=invalid_config exit=2" in capsys.readouterr().err


def test_nested_output_directory_is_created(tmp_path):
    out = tmp_path / "a" / "b"
    assert main(["synth", "--out", str(out)]) == 0
    assert (out / "cohort_raw.csv").is_file()


# --------------------------- clean -------------------------------------------
def test_clean_reports_stage_counts(workdir):
    manifest = _manifest(workdir, "clean")
    assert manifest["counts"] == {
        "input_count": 660,
        "stage1_remaining": 591,
        "clean_count": 500,
        "missing_cells": 160,
    }
    report = json.loads((workdir / "cleaning_report.json").read_text())
    assert report["stage1_removed"] == 69 and report["stage2_removed"] == 91
    assert len(pd.read_csv(workdir / "cohort_clean.csv")) == 500


def test_clean_on_clean_input_removes_nothing(workdir, tmp_path, capsys):
    assert main(["clean", "--in", str(workdir / "cohort_clean.csv"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "stage 1 removed    0" in out
    assert "stage 2 removed    0" in out


def test_clean_writes_text_report(workdir):
    text = (workdir / "cleaning_report.txt").read_text()
    assert "stage 1 removed    69" in text
    assert "clean records      500" in text
    assert "cleaning_report.txt" in _manifest(workdir, "clean")["outputs"]


def test_clean_empty_file(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "out"
    assert main(["clean", "--in", str(empty), "--out", str(out)]) == 0
    assert _manifest(out, "clean")["counts"]["clean_count"] == 0
    assert len(pd.read_csv(out / "cohort_clean.csv")) == 0


def test_malformed_row_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("student_id,academic_year,gpa\nS0001,1,3.0\nS0002,1\n")
    assert main(["clean", "--in", str(bad), "--out", str(tmp_path)]) == 3
    assert "code=malformed_row exit=3" in capsys.readouterr().err


def test_missing_required_column_exits_3(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("student_id,academic_year\nS0001,1\n")
    assert main(["clean", "--in", str(bad), "--out", str(tmp_path)]) == 3


def test_missing_input_exits_2(tmp_path):
    assert main(["clean", "--in", str(tmp_path / "absent.csv"), "--out", str(tmp_path)]) == 2


# --------------------------- cluster -----------------------------------------
def test_cluster_three_nonempty_clusters(workdir):
    frame = pd.read_csv(workdir / "cohort_clustered.csv")
    assert sorted(frame["cluster_label"].unique()) == ["C1", "C2", "C3"]
    summary = json.loads((workdir / "cluster_summary.json").read_text())
    assert [c["label"] for c in summary["clusters"]] == ["C1", "C2", "C3"]
    assert all(c["size"] > 0 for c in summary["clusters"])
    assert sum(c["size"] for c in summary["clusters"]) == 500


def test_cluster_k1_gives_one_label(workdir, tmp_path):
    args = ["cluster", "--in", str(workdir / "cohort_clean.csv"), "--features", "gpa", "--k", "1"]
    assert main(args + ["--out", str(tmp_path)]) == 0
    assert set(pd.read_csv(tmp_path / "cohort_clustered.csv")["cluster_label"]) == {"C1"}


def test_cluster_k_above_n_exits_2(workdir, tmp_path):
    args = ["cluster", "--in", str(workdir / "cohort_clean.csv"), "--features", "gpa", "--k", "501"]
    assert main(args + ["--out", str(tmp_path)]) == 2


def test_cluster_on_categorical_feature_exits_2(workdir, tmp_path):
    args = ["cluster", "--in", str(workdir / "cohort_clean.csv"), "--features", "coaching"]
    assert main(args + ["--out", str(tmp_path)]) == 2


def test_discretize_writes_band_labels(workdir, tmp_path):
    assert main(["discretize", "--in", str(workdir / "cohort_clean.csv"), "--out", str(tmp_path)]) == 0
    frame = pd.read_csv(tmp_path / "cohort_discretized.csv")
    assert set(frame["gpa"]) <= {"low", "medium", "high"}
    assert set(frame["attendance"]) <= {"low", "medium", "high"}


# --------------------------- train / predict / evaluate ----------------------
def test_train_then_predict(workdir, tmp_path):
    clustered = str(workdir / "cohort_clustered.csv")
    assert main(["train", "--in", clustered, "--discretize", "--out", str(tmp_path)]) == 0
    assert main(["predict", "--in", clustered, "--model", str(tmp_path / "model.json"), "--out", str(tmp_path)]) == 0

    frame = pd.read_csv(tmp_path / "predictions.csv")
    assert list(frame.columns[:3]) == ["student_id", "cluster_label", "predicted"]
    assert sorted(frame.columns[3:]) == ["p_C1", "p_C2", "p_C3"]
    assert len(frame) == 500
    sums = frame[[c for c in frame.columns if c.startswith("p_")]].sum(axis=1)
    assert (sums - 1.0).abs().max() < 1e-9
    assert _manifest(tmp_path, "train")["metrics"]["train_accuracy"] > 0.5


def test_train_with_holdout_split(workdir, tmp_path):
    clustered = str(workdir / "cohort_clustered.csv")
    assert main(["train", "--in", clustered, "--train-fraction", "0.8", "--out", str(tmp_path)]) == 0
    counts = _manifest(tmp_path, "train")["counts"]
    assert (counts["train_records"], counts["test_records"]) == (400, 100)


def test_train_without_label_exits_2(workdir, tmp_path):
    assert main(["train", "--in", str(workdir / "cohort_clean.csv"), "--out", str(tmp_path)]) == 2


def test_predict_without_model_file_exits_2(workdir, tmp_path):
    args = ["predict", "--in", str(workdir / "cohort_clean.csv"), "--model", str(tmp_path / "none.json")]
    assert main(args + ["--out", str(tmp_path)]) == 2


def _pairs_csv(path, counts):
    actual, predicted = materialize(ConfusionMatrix(("C1", "C2", "C3"), counts))
    pd.DataFrame({"cluster_label": actual, "predicted": predicted}).to_csv(path, index=False)
    return path


def test_evaluate_reproduces_the_cluster_table(tmp_path, capsys):
    pairs = _pairs_csv(tmp_path / "pairs.csv", TABLE_COUNTS)
    out = tmp_path / "out"
    assert main(["evaluate", "--in", str(pairs), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    for cell in ("96.8 %", "0.9 %", "1.4 %", "93.9 %", "1.8 %", "5.2 %", "98.8 %"):
        assert cell in printed
    assert "accuracy 484/500 = 0.9680" in printed

    percents = pd.read_csv(out / "percentages.csv", index_col=0)
    assert percents.loc["C1", "C1"] == pytest.approx(96.8, abs=0.05)
    assert percents.loc["C3", "C2"] == pytest.approx(5.2, abs=0.05)
    assert list(percents["Σ"][:3]) == [212, 112, 176]
    assert list(percents.loc["Σ"][:3]) == [217, 115, 168]
    assert percents.loc["Σ", "Σ"] == 500
    assert _manifest(out, "evaluate")["metrics"]["accuracy"] == 0.968


def test_evaluate_perfect_predictions(tmp_path):
    pairs = _pairs_csv(tmp_path / "pairs.csv", ((5, 0, 0), (0, 4, 0), (0, 0, 3)))
    assert main(["evaluate", "--in", str(pairs), "--out", str(tmp_path)]) == 0
    assert _manifest(tmp_path, "evaluate")["metrics"]["accuracy"] == 1.0


def test_evaluate_without_label_exits_2(tmp_path):
    pairs = tmp_path / "pairs.csv"
    pd.DataFrame({"predicted": ["C1", "C2"]}).to_csv(pairs, index=False)
    assert main(["evaluate", "--in", str(pairs), "--out", str(tmp_path)]) == 2


def test_evaluate_empty_file_exits_3(tmp_path, capsys):
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("")
    assert main(["evaluate", "--in", str(pairs), "--out", str(tmp_path / "out")]) == 3
    err = capsys.readouterr().err.strip()
    assert err.startswith("error code=data_error exit=3 message=")
    assert "\n" not in err


def test_evaluate_ragged_file_exits_3(tmp_path, capsys):
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("cluster_label,predicted\nC1,C1\nC1,C2,C3,C4\n")
    assert main(["evaluate", "--in", str(pairs), "--out", str(tmp_path / "out")]) == 3
    err = capsys.readouterr().err.strip()
    assert "exit=3" in err
    assert "\n" not in err


# --------------------------- report ------------------------------------------
def test_report_fractions_sum_to_one(workdir, tmp_path):
    assert main(["report", "--in", str(workdir / "cohort_clustered.csv"), "--out", str(tmp_path)]) == 0
    cohort = pd.read_csv(tmp_path / "cohort_levels.csv")
    for _, group in cohort.groupby("academic_year"):
        assert group["fraction"].sum() == pytest.approx(1.0, abs=1e-9)
    gpa = pd.read_csv(tmp_path / "year_gpa_summary.csv")
    assert {"academic_year", "cluster_label", "count", "gpa_min", "gpa_max", "gpa_mean"} <= set(gpa.columns)
    assert gpa["count"].sum() == 500


def test_report_on_uniform_cohort(tmp_path):
    header = "student_id,academic_year,semester,quiz,assignment,discussion,lab,attendance,gpa,coaching"
    rows = [f"S{i:04d},2,3,90,90,90,90,95,3.0,yes" for i in range(1, 5)]
    data = tmp_path / "uniform.csv"
    data.write_text("\n".join([header] + rows) + "\n")
    assert main(["report", "--in", str(data), "--out", str(tmp_path)]) == 0
    cohort = pd.read_csv(tmp_path / "cohort_levels.csv")
    assert cohort.to_dict("records") == [{"academic_year": 2, "level": "high", "fraction": 1.0}]


def test_report_writes_year_score_summary(workdir, tmp_path):
    assert main(["report", "--in", str(workdir / "cohort_clustered.csv"), "--out", str(tmp_path)]) == 0
    scores = pd.read_csv(tmp_path / "year_score_summary.csv")
    assert list(scores.columns) == ["academic_year", "score", "count", "mean", "low", "medium", "high"]
    assert set(scores["score"]) == {"quiz", "assignment", "discussion", "lab"}
    assert (scores[["low", "medium", "high"]].sum(axis=1) - 1.0).abs().max() < 1e-9
    assert scores.groupby("score")["count"].sum().tolist() == [500] * 4
    assert "year_score_summary.csv" in _manifest(tmp_path, "report")["outputs"]
    assert "Coursework score levels by academic year" in (tmp_path / "report.txt").read_text()
