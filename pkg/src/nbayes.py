"""Naive Bayes classifier over mixed categorical and numeric features.

Categorical features use Laplace-smoothed frequency tables; numeric features use
per-class Gaussians. All scoring happens in log space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.config import DEFAULT_ALPHA, DEFAULT_VARIANCE_FLOOR
from src.dataset import Dataset, FeatureSpec, StudentRecord, schema_fingerprint
from src.errors import (
    InsufficientDataError,
    InvalidArgumentError,
    MissingColumnError,
    ModelFormatError,
    UnknownCategoryError,
)

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NaiveBayesModel:
    classes: Tuple[str, ...]
    priors: Mapping[str, float]
    features: Tuple[FeatureSpec, ...]
    # (feature, class) -> category -> probability
    categorical_tables: Mapping[Tuple[str, str], Mapping[str, float]]
    # (feature, class) -> (mean, variance)
    gaussians: Mapping[Tuple[str, str], Tuple[float, float]]
    alpha: float
    variance_floor: float
    label: str
    schema_fingerprint: str = ""

    def __post_init__(self):
        if not self.classes:
            raise ModelFormatError("model has no classes")
        if abs(sum(self.priors[c] for c in self.classes) - 1.0) > 1e-9:
            raise ModelFormatError("class priors do not sum to 1")
        for (feature, cls), table in self.categorical_tables.items():
            if abs(sum(table.values()) - 1.0) > 1e-9:
                raise ModelFormatError(f"P({feature} | {cls}) does not sum to 1")
        for (feature, cls), (_, variance) in self.gaussians.items():
            if variance < self.variance_floor:
                raise ModelFormatError(f"variance of {feature} | {cls} is below the floor")

    @property
    def feature_names(self) -> List[str]:
        return [f.name for f in self.features]


def _labels(train: Dataset, label: str) -> List[str]:
    labels = []
    for row in train.rows:
        value = row.get(label)
        if value is None:
            raise MissingColumnError(f"row {row.student_id} has no {label!r} value")
        labels.append(str(value))
    return labels


def fit(
    train: Dataset,
    label: str,
    alpha: float = DEFAULT_ALPHA,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    features: Optional[Sequence[str]] = None,
) -> NaiveBayesModel:
    """Estimate priors and per-class conditionals.

    ``features`` defaults to every schema feature other than ``label``.
    Classes are ordered by first appearance in ``train``.
    """
    if alpha < 0:
        raise InvalidArgumentError(f"alpha must be >= 0, got {alpha}")
    if variance_floor <= 0:
        raise InvalidArgumentError(f"variance_floor must be > 0, got {variance_floor}")
    if not train.rows:
        raise InsufficientDataError("cannot fit on an empty training set")

    names = list(features) if features is not None else [n for n in train.schema.names if n != label]
    specs = tuple(train.schema.feature(n) for n in names if n != label)
    labels = _labels(train, label)
    classes = tuple(dict.fromkeys(labels))
    n = len(labels)
    label_array = np.array(labels, dtype=object)

    priors = {c: labels.count(c) / n for c in classes}
    tables: Dict[Tuple[str, str], Dict[str, float]] = {}
    gaussians: Dict[Tuple[str, str], Tuple[float, float]] = {}

    for spec in specs:
        column = np.array(train.column(spec.name), dtype=object)
        for cls in classes:
            values = column[label_array == cls]
            if spec.kind == "categorical":
                denominator = len(values) + alpha * len(spec.categories)
                if denominator == 0:
                    raise InsufficientDataError(
                        f"alpha=0 leaves P({spec.name} | {cls}) undefined for an empty class"
                    )
                counts = {cat: int(np.sum(values == cat)) for cat in spec.categories}
                tables[(spec.name, cls)] = {
                    cat: (counts[cat] + alpha) / denominator for cat in spec.categories
                }
            else:
                numbers = values.astype(float)
                mean = float(numbers.mean())
                variance = float(numbers.var(ddof=1)) if len(numbers) > 1 else variance_floor
                gaussians[(spec.name, cls)] = (mean, max(variance, variance_floor))

    logger.info(f"Fitted naive Bayes on {n} rows, {len(specs)} features, classes {list(classes)}")
    return NaiveBayesModel(
        classes=classes,
        priors=priors,
        features=specs,
        categorical_tables=tables,
        gaussians=gaussians,
        alpha=alpha,
        variance_floor=variance_floor,
        label=label,
        schema_fingerprint=schema_fingerprint(train.schema),
    )


def _gaussian_log_density(x: float, mean: float, variance: float) -> float:
    return -0.5 * (LOG_2PI + math.log(variance)) - (x - mean) ** 2 / (2.0 * variance)


def joint_log_scores(model: NaiveBayesModel, record: StudentRecord) -> np.ndarray:
    """Unnormalized log P(class) + sum of log P(feature | class), in ``model.classes`` order."""
    scores = np.array([math.log(model.priors[c]) if model.priors[c] > 0 else -math.inf for c in model.classes])
    for spec in model.features:
        value = record.get(spec.name)
        if value is None:
            raise InvalidArgumentError(f"record {record.student_id} has no value for {spec.name!r}")
        if spec.kind == "categorical":
            category = str(value)
            if category not in spec.categories:
                raise UnknownCategoryError(
                    f"{spec.name}={category!r} is outside the declared domain {list(spec.categories)}"
                )
            for i, cls in enumerate(model.classes):
                p = model.categorical_tables[(spec.name, cls)][category]
                scores[i] += math.log(p) if p > 0 else -math.inf
        else:
            x = float(value)
            for i, cls in enumerate(model.classes):
                mean, variance = model.gaussians[(spec.name, cls)]
                scores[i] += _gaussian_log_density(x, mean, variance)
    return scores


def normalize_log_scores(scores: np.ndarray) -> np.ndarray:
    top = np.max(scores)
    if not np.isfinite(top):
        # every class impossible; fall back to uniform
        return np.full(len(scores), 1.0 / len(scores))
    weights = np.exp(scores - top)
    return weights / weights.sum()


def posterior(model: NaiveBayesModel, record: StudentRecord) -> Dict[str, float]:
    """Normalized class probabilities for one record."""
    probabilities = normalize_log_scores(joint_log_scores(model, record))
    return {cls: float(p) for cls, p in zip(model.classes, probabilities)}


def predict(model: NaiveBayesModel, record: StudentRecord) -> str:
    """Most probable class; ties go to the class seen first in training."""
    return model.classes[int(np.argmax(joint_log_scores(model, record)))]


def predict_many(model: NaiveBayesModel, records: Sequence[StudentRecord]) -> List[str]:
    return [predict(model, r) for r in records]
