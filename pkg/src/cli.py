"""Command-line front end: synth, clean, discretize, cluster, train, predict, evaluate, report.

Exit codes: 0 success, 2 usage/config error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src import evaluation, hierarchy, kmeans, nbayes, reporting
from src.config import PROCESSED_DIR, ToolkitConfig, config_fingerprint, load_config
from src.dataset import (
    Dataset,
    FeatureSchema,
    StudentDataLoader,
    clean,
    discretize,
    read_csv_file,
    schema_fingerprint,
    split,
    write_dataset_csv,
    write_raw_csv,
)
from src.errors import (
    DataError,
    InvalidArgumentError,
    MissingColumnError,
    ModelFormatError,
    ToolkitError,
    UsageError,
)
from src.model_store import RunManifest, load_model, save_model, write_manifest
from src.synth import generate

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, ToolkitConfig, int, Path], RunManifest]


# --------------------------- Helpers -----------------------------------------
def _feature_list(text: Optional[str]) -> Optional[List[str]]:
    if not text:
        return None
    return [name.strip() for name in text.split(",") if name.strip()]


def _natural_key(label: str):
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", label)]


def _input_path(args: argparse.Namespace) -> Path:
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    return path


def _load(args: argparse.Namespace, schema: FeatureSchema) -> Dataset:
    ds, report = StudentDataLoader(schema).load(_input_path(args))
    removed = report.input_count - report.clean_count
    if removed:
        logger.warning(f"{removed} incomplete row(s) dropped while loading {args.input}")
    return ds


def _label(args: argparse.Namespace, cfg: ToolkitConfig) -> str:
    return getattr(args, "label", None) or cfg.data_schema.label


def _require_label(ds: Dataset, label: str) -> None:
    if not ds.has_column(label):
        raise MissingColumnError(f"label column {label!r} is absent from the input")


def _manifest(args: argparse.Namespace, cfg: ToolkitConfig, seed: Optional[int], **fields) -> RunManifest:
    inputs = [Path(p).name for p in (getattr(args, "input", None), getattr(args, "model", None)) if p]
    return RunManifest(
        command=args.command,
        inputs=inputs,
        seed=seed,
        config_fingerprint=config_fingerprint(cfg),
        **fields,
    )


def _predict_rows(model: nbayes.NaiveBayesModel, ds: Dataset) -> Tuple[List[str], List[Dict[str, float]]]:
    predictions, posteriors = [], []
    for record in ds.rows:
        post = nbayes.posterior(model, record)
        posteriors.append(post)
        predictions.append(nbayes.predict(model, record))
    return predictions, posteriors


def _model_input(args: argparse.Namespace, cfg: ToolkitConfig) -> Tuple[nbayes.NaiveBayesModel, Dataset]:
    """Load the model and the input dataset, applying the bands the model was trained with."""
    if not Path(args.model).is_file():
        raise UsageError(f"model file not found: {args.model}")
    model, document = load_model(args.model)
    ds = _load(args, cfg.data_schema.with_label(document.label))
    if document.bands:
        ds = discretize(ds, document.bands)
    if schema_fingerprint(ds.schema) != document.schema_fingerprint:
        raise ModelFormatError(
            f"{Path(args.model).name} was trained on schema {document.schema_fingerprint}, "
            f"input uses {schema_fingerprint(ds.schema)}"
        )
    return model, ds


# --------------------------- Commands ----------------------------------------
def cmd_synth(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    synth_cfg = cfg.synth.model_copy(update={"seed": seed})
    raws = generate(synth_cfg)
    target = out / "cohort_raw.csv"
    write_raw_csv(raws, cfg.data_schema, target)
    print(f"✓ Wrote {len(raws)} records ({synth_cfg.missing_cells} missing cells) to {target}")
    return _manifest(
        args, cfg, seed,
        outputs=[target.name],
        counts={"records": len(raws), "missing_cells": sum(r.missing_count for r in raws)},
    )


def cmd_clean(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    raws = read_csv_file(_input_path(args), cfg.data_schema)
    ds, report = clean(raws, cfg.data_schema)
    target = out / "cohort_clean.csv"
    report_path = out / "cleaning_report.json"
    text_path = out / "cleaning_report.txt"
    write_dataset_csv(ds, target)
    report_path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    text = reporting.format_cleaning_report(report)
    text_path.write_text(text, encoding="utf-8")
    print(text, end="")
    print(f"✓ Wrote {report.clean_count} clean records to {target}")
    return _manifest(
        args, cfg, None,
        outputs=[target.name, report_path.name, text_path.name],
        counts={
            "input_count": report.input_count,
            "stage1_remaining": report.stage1_remaining,
            "clean_count": report.clean_count,
            "missing_cells": report.missing_cells,
        },
    )


def cmd_discretize(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    ds = discretize(_load(args, cfg.data_schema), cfg.bands)
    target = out / "cohort_discretized.csv"
    write_dataset_csv(ds, target)
    print(f"✓ Discretized {', '.join(cfg.bands)} for {len(ds)} records into {target}")
    return _manifest(args, cfg, None, outputs=[target.name], counts={"records": len(ds)})


def cmd_cluster(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    features = _feature_list(args.features)
    if not features:
        raise InvalidArgumentError("--features must name at least one numeric feature")
    label = _label(args, cfg)
    k = args.k if args.k is not None else cfg.kmeans.k
    ds = _load(args, cfg.data_schema.with_label(label))
    labeled, summary = kmeans.cluster_dataset(
        ds, features, k=k, seed=seed,
        max_iter=cfg.kmeans.max_iter, tol=cfg.kmeans.tol, restarts=cfg.kmeans.restarts,
        label=label,
    )
    target = out / "cohort_clustered.csv"
    summary_json = out / "cluster_summary.json"
    summary_txt = out / "cluster_summary.txt"
    write_dataset_csv(labeled, target)
    summary_json.write_text(json.dumps(summary.as_dict(), indent=2) + "\n", encoding="utf-8")
    summary_txt.write_text(reporting.format_cluster_summary(summary), encoding="utf-8")
    print(reporting.format_cluster_summary(summary), end="")
    print(f"✓ Wrote {k} clusters for {len(labeled)} records to {target}")
    return _manifest(
        args, cfg, seed,
        outputs=[target.name, summary_json.name, summary_txt.name],
        counts={
            "records": len(labeled),
            "k": k,
            **{f"size_{name}": size for name, size in zip(summary.labels, summary.sizes)},
        },
        metrics={"inertia": summary.inertia},
    )


def cmd_train(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    label = _label(args, cfg)
    ds = _load(args, cfg.data_schema.with_label(label))
    _require_label(ds, label)
    outputs = []
    train, test = ds, None
    if args.train_fraction is not None:
        train, test = split(ds, args.train_fraction, seed)
        for name, part in (("train.csv", train), ("test.csv", test)):
            write_dataset_csv(part, out / name)
            outputs.append(name)

    bands = dict(cfg.bands) if args.discretize else None
    fit_on = discretize(train, bands) if bands else train
    model = nbayes.fit(
        fit_on, label,
        alpha=cfg.nbayes.alpha, variance_floor=cfg.nbayes.variance_floor,
        features=_feature_list(args.features),
    )
    target = out / "model.json"
    save_model(model, target, bands)
    outputs.insert(0, target.name)

    train_accuracy = evaluation.accuracy(
        evaluation.confusion(
            [str(r[label]) for r in fit_on.rows], nbayes.predict_many(model, fit_on.rows), model.classes
        )
    )
    print(f"✓ Trained on {len(train)} records, classes {list(model.classes)}; model saved to {target}")
    counts = {"train_records": len(train), "classes": len(model.classes)}
    if test is not None:
        counts["test_records"] = len(test)
    return _manifest(args, cfg, seed, outputs=outputs, counts=counts, metrics={"train_accuracy": train_accuracy})


def cmd_predict(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    model, ds = _model_input(args, cfg)
    predictions, posteriors = _predict_rows(model, ds)
    rows = []
    for record, predicted, post in zip(ds.rows, predictions, posteriors):
        row = {ds.schema.id_column: record.student_id}
        if model.label in record.values:
            row[model.label] = record[model.label]
        row["predicted"] = predicted
        row.update({f"p_{cls}": post[cls] for cls in model.classes})
        rows.append(row)
    columns = [ds.schema.id_column] + ([model.label] if ds.has_column(model.label) else [])
    columns += ["predicted"] + [f"p_{cls}" for cls in model.classes]
    target = out / "predictions.csv"
    pd.DataFrame(rows, columns=columns).to_csv(target, index=False, lineterminator="\n")
    print(f"✓ Wrote {len(rows)} predictions to {target}")
    return _manifest(args, cfg, None, outputs=[target.name], counts={"records": len(rows)})


def _evaluation_pairs(args: argparse.Namespace, cfg: ToolkitConfig) -> Tuple[List[str], List[str], List[str]]:
    if args.model:
        model, ds = _model_input(args, cfg)
        _require_label(ds, model.label)
        actual = [str(r[model.label]) for r in ds.rows]
        predicted, _ = _predict_rows(model, ds)
        return actual, predicted, list(model.classes)

    label = _label(args, cfg)
    path = _input_path(args)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path.name} has no header or rows") from e
    except pd.errors.ParserError as e:
        raise DataError(f"{path.name}: {e}") from e
    for column in (label, args.predicted_column):
        if column not in frame.columns:
            raise MissingColumnError(f"column {column!r} is absent from {Path(args.input).name}")
    return frame[label].tolist(), frame[args.predicted_column].tolist(), []


def cmd_evaluate(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    actual, predicted, known = _evaluation_pairs(args, cfg)
    labels = sorted(set(known) | set(actual) | set(predicted), key=_natural_key)
    matrix = evaluation.confusion(actual, predicted, labels)
    table = evaluation.column_percentages(matrix)
    acc = evaluation.accuracy(matrix)

    confusion_path = out / "confusion.csv"
    percent_path = out / "percentages.csv"
    text_path = out / "evaluation.txt"
    reporting.confusion_frame(matrix).to_csv(confusion_path, lineterminator="\n")
    reporting.percentage_frame(table).to_csv(percent_path, lineterminator="\n")
    text = reporting.format_percentage_table(table)
    text += f"\naccuracy {matrix.trace}/{matrix.total} = {acc:.4f}\n"
    for label, m in evaluation.per_class_metrics(matrix).items():
        text += f"{label:<8} precision {m['precision']:.4f}  recall {m['recall']:.4f}  support {m['support']}\n"
    text_path.write_text(text, encoding="utf-8")
    print(text, end="")
    return _manifest(
        args, cfg, None,
        outputs=[confusion_path.name, percent_path.name, text_path.name],
        counts={"total": matrix.total, "correct": matrix.trace},
        metrics={"accuracy": acc},
    )


def cmd_report(args: argparse.Namespace, cfg: ToolkitConfig, seed: int, out: Path) -> RunManifest:
    label = _label(args, cfg)
    ds = _load(args, cfg.data_schema.with_label(label))
    cohort = reporting.cohort_frame(hierarchy.cohort_report(ds, cfg.hierarchy))
    coaching = reporting.coaching_frame(hierarchy.coaching_report(ds, cfg.hierarchy))
    gpa = reporting.year_gpa_summary(ds, label)
    scores = reporting.year_score_summary(ds, cfg.hierarchy)

    tables = {
        "cohort_levels.csv": cohort,
        "coaching_levels.csv": coaching,
        "year_gpa_summary.csv": gpa,
        "year_score_summary.csv": scores,
    }
    for name, frame in tables.items():
        frame.to_csv(out / name, index=False, lineterminator="\n")
    text = reporting.format_report(cohort, gpa, scores)
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return _manifest(
        args, cfg, None,
        outputs=list(tables) + ["report.txt"],
        counts={"records": len(ds), "years": int(cohort["academic_year"].nunique())},
    )


COMMANDS: Dict[str, Handler] = {
    "synth": cmd_synth,
    "clean": cmd_clean,
    "discretize": cmd_discretize,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


# --------------------------- Parser ------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="toolkit config file (JSON)")
    common.add_argument("--seed", type=int, help="seed for every random step (default: config seed)")
    common.add_argument("--out", default=str(PROCESSED_DIR), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="edm",
        description="Student performance mining: cleaning, k-means clustering, naive Bayes prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common], help="generate the synthetic raw cohort")

    for name, help_text in (
        ("clean", "two-stage missing-value cleaning"),
        ("discretize", "replace banded numeric features by band labels"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--in", dest="input", required=True)

    p = sub.add_parser("cluster", parents=[common], help="k-means clustering; appends C1..Ck labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--features", required=True, help="comma-separated numeric features")
    p.add_argument("--k", type=int)
    p.add_argument("--label", help="name of the cluster label column")

    p = sub.add_parser("train", parents=[common], help="fit a naive Bayes model")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--label")
    p.add_argument("--features", help="comma-separated features (default: all but the label)")
    p.add_argument("--discretize", action="store_true", help="apply the config bands before fitting")
    p.add_argument("--train-fraction", type=float, help="hold out a seeded test split")

    p = sub.add_parser("predict", parents=[common], help="predict classes with a saved model")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="confusion matrix and column percentages")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--label")
    p.add_argument("--model", help="predict in-line instead of reading a predicted column")
    p.add_argument("--predicted-column", default="predicted")

    p = sub.add_parser("report", parents=[common], help="hierarchy ranking and per-year GPA summary")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--label")
    return parser


def _one_line(error: Exception) -> str:
    return " ".join(str(error).split())


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.seed
        if seed < 0:
            raise InvalidArgumentError(f"--seed must be non-negative, got {seed}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = COMMANDS[args.command](args, cfg, seed, out)
        write_manifest(manifest, out)
    except ToolkitError as e:
        print(f"error code={e.code} exit={e.exit_code} message={_one_line(e)}", file=sys.stderr)
        return e.exit_code
    except UnicodeDecodeError as e:
        print(f"error code=encoding exit=3 message={_one_line(e)}", file=sys.stderr)
        return 3
    return 0
