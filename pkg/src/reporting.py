"""Plot-ready tables (pandas) and aligned text renderings of results."""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.dataset import CleaningReport, Dataset
from src.evaluation import ConfusionMatrix, PercentageTable
from src.hierarchy import KNOWLEDGE_INPUTS, LEVEL_ORDER, HierarchyConfig, level_for
from src.kmeans import ClusterSummary

SIGMA = "Σ"


def confusion_frame(m: ConfusionMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(m.array, index=list(m.labels), columns=list(m.labels))
    frame[SIGMA] = list(m.row_totals)
    frame.loc[SIGMA] = list(m.column_totals) + [m.total]
    frame.index.name = "actual"
    return frame


def percentage_frame(table: PercentageTable) -> pd.DataFrame:
    frame = pd.DataFrame(
        list(table.percents), index=list(table.labels), columns=list(table.labels), dtype=object
    )
    frame[SIGMA] = list(table.row_totals)
    frame.loc[SIGMA] = list(table.column_totals) + [table.total]
    frame.index.name = "actual"
    return frame


def format_percentage_table(table: PercentageTable) -> str:
    """Actual rows × predicted columns with Σ marginals, laid out like the published cluster table."""
    width = max(9, max(len(label) for label in table.labels) + 2)
    pad = " " * 8
    head = pad + f"{'':<{width}}" + "Predicted"
    columns = pad + f"{'':<{width}}" + "".join(f"{label:<{width}}" for label in table.labels) + SIGMA
    lines = [head, columns]
    for i, label in enumerate(table.labels):
        prefix = "Actual  " if i == 0 else pad
        cells = "".join(f"{f'{p:.1f} %':<{width}}" for p in table.percents[i])
        lines.append(prefix + f"{label:<{width}}" + cells + str(table.row_totals[i]))
    totals = "".join(f"{c:<{width}}" for c in table.column_totals)
    lines.append(f"{SIGMA:<8}" + f"{'':<{width}}" + totals + str(table.total))
    flagged = [label for label, zero in zip(table.labels, table.zero_columns) if zero]
    if flagged:
        lines.append(f"(no predictions for: {', '.join(flagged)})")
    return "\n".join(lines) + "\n"


def format_cleaning_report(report: CleaningReport) -> str:
    return (
        f"input records      {report.input_count}\n"
        f"missing cells      {report.missing_cells}\n"
        f"stage 1 removed    {report.stage1_removed}\n"
        f"stage 1 remaining  {report.stage1_remaining}\n"
        f"stage 2 removed    {report.stage2_removed}\n"
        f"clean records      {report.clean_count}\n"
    )


def format_cluster_summary(summary: ClusterSummary) -> str:
    header = f"{'cluster':<9}{'size':>6}" + "".join(f"{name:>14}" for name in summary.features)
    lines = [header]
    for label, size, centroid in zip(summary.labels, summary.sizes, summary.centroids):
        lines.append(f"{label:<9}{size:>6}" + "".join(f"{v:>14.4f}" for v in centroid))
    lines.append(f"inertia (standardized) {summary.inertia:.6f}")
    return "\n".join(lines) + "\n"


def cohort_frame(report: Dict[int, Dict[str, float]]) -> pd.DataFrame:
    rows = [
        {"academic_year": year, "level": level, "fraction": fraction}
        for year, levels in report.items()
        for level, fraction in levels.items()
    ]
    return pd.DataFrame(rows, columns=["academic_year", "level", "fraction"])


def coaching_frame(report: Dict[Tuple[int, str], Dict[str, float]]) -> pd.DataFrame:
    rows = [
        {"academic_year": year, "coaching": coaching, "level": level, "fraction": fraction}
        for (year, coaching), levels in report.items()
        for level, fraction in levels.items()
    ]
    return pd.DataFrame(rows, columns=["academic_year", "coaching", "level", "fraction"])


def year_gpa_summary(ds: Dataset, label: str = "") -> pd.DataFrame:
    """GPA count/min/max/mean per academic year, and per cluster when ``label`` is a column."""
    frame = ds.to_frame()
    keys: List[str] = ["academic_year"]
    if label and label in frame.columns:
        keys.append(label)
    summary = (
        frame.groupby(keys, sort=True)["gpa"]
        .agg(["count", "min", "max", "mean"])
        .reset_index()
        .rename(columns={"min": "gpa_min", "max": "gpa_max", "mean": "gpa_mean"})
    )
    summary["gpa_mean"] = summary["gpa_mean"].round(4)
    return summary


def year_score_summary(ds: Dataset, cfg: HierarchyConfig, scores: Sequence[str] = KNOWLEDGE_INPUTS) -> pd.DataFrame:
    """Per academic year and coursework score: count, mean and the fraction of students at each level."""
    frame = ds.to_frame()
    columns = [c for c in scores if c in frame.columns]
    levels = [level.value for level in LEVEL_ORDER]
    out_columns = ["academic_year", "score", "count", "mean"] + levels
    if frame.empty or not columns:
        return pd.DataFrame(columns=out_columns)

    long = frame.melt(id_vars=["academic_year"], value_vars=columns, var_name="score", value_name="value")
    long["value"] = long["value"].astype(float)
    long["level"] = [level_for(v / 100.0, cfg).value for v in long["value"]]
    keys = ["academic_year", "score"]
    stats = long.groupby(keys, sort=True)["value"].agg(["count", "mean"])
    fractions = (
        pd.crosstab([long["academic_year"], long["score"]], long["level"], normalize="index")
        .reindex(columns=levels, fill_value=0.0)
    )
    summary = stats.join(fractions).reset_index()
    summary["mean"] = summary["mean"].round(4)
    return summary[out_columns]


def format_report(cohort: pd.DataFrame, gpa: pd.DataFrame, scores: Optional[pd.DataFrame] = None) -> str:
    parts = [
        "Overall ranking by academic year",
        cohort.to_string(index=False),
        "",
        "GPA by academic year",
        gpa.to_string(index=False),
    ]
    if scores is not None:
        parts += ["", "Coursework score levels by academic year", scores.to_string(index=False)]
    return "\n".join(parts) + "\n"
