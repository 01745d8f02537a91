"""Confusion matrices, the column-normalized percentage view, and accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.errors import EmptyMatrixError, InvalidArgumentError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are actual classes, columns are predicted classes."""

    labels: Tuple[str, ...]
    counts: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        k = len(self.labels)
        if len(set(self.labels)) != k:
            raise InvalidArgumentError("labels must be unique")
        counts = tuple(tuple(int(c) for c in row) for row in self.counts)
        if len(counts) != k or any(len(row) != k for row in counts):
            raise InvalidArgumentError(f"counts must be {k} x {k}")
        if any(c < 0 for row in counts for c in row):
            raise InvalidArgumentError("counts must be non-negative")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", counts)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.counts, dtype=int).reshape(len(self.labels), len(self.labels))

    @property
    def total(self) -> int:
        return int(self.array.sum())

    @property
    def row_totals(self) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.array.sum(axis=1))

    @property
    def column_totals(self) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.array.sum(axis=0))

    @property
    def trace(self) -> int:
        return int(np.trace(self.array))


@dataclass(frozen=True)
class PercentageTable:
    labels: Tuple[str, ...]
    percents: Tuple[Tuple[float, ...], ...]
    row_totals: Tuple[int, ...]
    column_totals: Tuple[int, ...]
    zero_columns: Tuple[bool, ...]

    @property
    def total(self) -> int:
        return sum(self.column_totals)


def confusion(actual: Sequence[str], predicted: Sequence[str], labels: Sequence[str]) -> ConfusionMatrix:
    """Count (actual, predicted) pairs into a matrix over ``labels``, rows actual and columns predicted."""
    if len(actual) != len(predicted):
        raise InvalidArgumentError(f"{len(actual)} actual labels but {len(predicted)} predictions")
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for a, p in zip(actual, predicted):
        if a not in index or p not in index:
            unknown = a if a not in index else p
            raise InvalidArgumentError(f"label {unknown!r} is not in {list(labels)}")
        counts[index[a], index[p]] += 1
    return ConfusionMatrix(tuple(labels), tuple(map(tuple, counts.tolist())))


def materialize(m: ConfusionMatrix) -> Tuple[List[str], List[str]]:
    """Expand counts into (actual, predicted) label pairs, row-major."""
    actual, predicted = [], []
    for i, a in enumerate(m.labels):
        for j, p in enumerate(m.labels):
            actual.extend([a] * m.counts[i][j])
            predicted.extend([p] * m.counts[i][j])
    return actual, predicted


def _percent(count: int, total: int) -> float:
    value = Decimal(100 * count) / Decimal(total)
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def column_percentages(m: ConfusionMatrix) -> PercentageTable:
    """Each cell as a percentage of its predicted-class column, rounded half-up to 0.1."""
    columns = m.column_totals
    k = len(m.labels)
    percents = tuple(
        tuple(_percent(m.counts[i][j], columns[j]) if columns[j] else 0.0 for j in range(k))
        for i in range(k)
    )
    return PercentageTable(
        labels=m.labels,
        percents=percents,
        row_totals=m.row_totals,
        column_totals=columns,
        zero_columns=tuple(total == 0 for total in columns),
    )


def accuracy(m: ConfusionMatrix) -> float:
    """Fraction of pairs on the diagonal."""
    if m.total == 0:
        raise EmptyMatrixError("accuracy is undefined for an empty confusion matrix")
    return m.trace / m.total


def per_class_metrics(m: ConfusionMatrix) -> Dict[str, Dict[str, float]]:
    """Precision (column-normalized diagonal) and recall (row-normalized diagonal) per label.
    Undefined ratios are reported as 0.0."""
    rows, columns = m.row_totals, m.column_totals
    metrics = {}
    for i, label in enumerate(m.labels):
        hit = m.counts[i][i]
        metrics[label] = {
            "precision": hit / columns[i] if columns[i] else 0.0,
            "recall": hit / rows[i] if rows[i] else 0.0,
            "support": rows[i],
        }
    return metrics
