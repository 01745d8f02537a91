"""Hierarchical overall ranking.

knowledge (quiz, assignment, discussion, lab) and punctuality (attendance) combine into
performance; performance combines with coaching into the overall ranking. Every node is
a weighted average of encoded inputs, thresholded back to a three-level scale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.dataset import Dataset, StudentRecord
from src.errors import InsufficientDataError, InvalidArgumentError

logger = logging.getLogger(__name__)

KNOWLEDGE_INPUTS = ("quiz", "assignment", "discussion", "lab")
PERFORMANCE_INPUTS = ("knowledge", "punctuality")
# "classes" is attendance-based punctuality feeding the overall node directly
OVERALL_INPUTS = ("performance", "coaching", "classes")
QUIZ_WEIGHT = 0.15


class Level(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


LEVEL_ORDER = (Level.LOW, Level.MEDIUM, Level.HIGH)


def _default_knowledge_weights() -> Dict[str, float]:
    rest = (1.0 - QUIZ_WEIGHT) / 3
    return {"quiz": QUIZ_WEIGHT, "assignment": rest, "discussion": rest, "lab": rest}


class HierarchyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    knowledge_weights: Dict[str, float] = Field(default_factory=_default_knowledge_weights)
    punctuality_thresholds: Tuple[float, float] = (60.0, 85.0)
    performance_weights: Dict[str, float] = Field(
        default_factory=lambda: {"knowledge": 0.5, "punctuality": 0.5}
    )
    overall_weights: Dict[str, float] = Field(
        default_factory=lambda: {"performance": 0.7, "coaching": 0.3, "classes": 0.0}
    )
    level_encoding: Dict[Level, float] = Field(
        default_factory=lambda: {Level.LOW: 0.0, Level.MEDIUM: 0.5, Level.HIGH: 1.0}
    )
    level_cutoffs: Tuple[float, float] = (0.4, 0.7)

    @model_validator(mode="after")
    def _check(self) -> "HierarchyConfig":
        for name, weights, allowed in (
            ("knowledge_weights", self.knowledge_weights, KNOWLEDGE_INPUTS),
            ("performance_weights", self.performance_weights, PERFORMANCE_INPUTS),
            ("overall_weights", self.overall_weights, OVERALL_INPUTS),
        ):
            unknown = set(weights) - set(allowed)
            if unknown:
                raise ValueError(f"{name}: unknown inputs {sorted(unknown)}")
            if any(w < 0 for w in weights.values()):
                raise ValueError(f"{name}: weights must be non-negative")
            if abs(sum(weights.values()) - 1.0) > 1e-9:
                raise ValueError(f"{name}: weights must sum to 1, got {sum(weights.values())}")

        low_cut, high_cut = self.level_cutoffs
        if not low_cut < high_cut:
            raise ValueError("level_cutoffs must be strictly increasing")
        if not self.punctuality_thresholds[0] < self.punctuality_thresholds[1]:
            raise ValueError("punctuality_thresholds must be strictly increasing")
        if set(self.level_encoding) != set(Level):
            raise ValueError("level_encoding must encode low, medium and high")
        encoded = [self.level_encoding[level] for level in LEVEL_ORDER]
        if not 0.0 <= encoded[0] < encoded[1] < encoded[2] <= 1.0:
            raise ValueError("level_encoding must be strictly increasing inside [0, 1]")
        # each encoded level must threshold back to itself
        if not (encoded[0] < low_cut <= encoded[1] < high_cut <= encoded[2]):
            raise ValueError("level_cutoffs must separate the encoded levels")
        return self

    def encode(self, level: Level) -> float:
        return self.level_encoding[Level(level)]


@dataclass(frozen=True)
class RankingResult:
    student_id: str
    knowledge: Level
    punctuality: Level
    performance: Level
    overall: Level
    overall_score: float


def level_for(score: float, cfg: HierarchyConfig) -> Level:
    """Map a score in [0, 1] to a level using the configured cutoffs."""
    low_cut, high_cut = cfg.level_cutoffs
    if score < low_cut:
        return Level.LOW
    if score < high_cut:
        return Level.MEDIUM
    return Level.HIGH


def _weighted(weights: Mapping[str, float], inputs: Mapping[str, float]) -> float:
    return sum(weight * inputs[name] for name, weight in weights.items())


def knowledge_score(record: StudentRecord, cfg: HierarchyConfig) -> float:
    """Weighted average of the four coursework scores, each scaled to [0, 1]."""
    scores = {name: float(record[name]) / 100.0 for name in cfg.knowledge_weights}
    return _weighted(cfg.knowledge_weights, scores)


def score_knowledge(record: StudentRecord, cfg: HierarchyConfig) -> Level:
    """Knowledge level from the weighted coursework score."""
    return level_for(knowledge_score(record, cfg), cfg)


def score_punctuality(record: StudentRecord, cfg: HierarchyConfig) -> Level:
    """Punctuality level from attendance: below the low threshold is low, above the high one is high."""
    low, high = cfg.punctuality_thresholds
    attendance = record.attendance
    if attendance < low:
        return Level.LOW
    if attendance > high:
        return Level.HIGH
    return Level.MEDIUM


def performance_score(knowledge: Level, punctuality: Level, cfg: HierarchyConfig) -> float:
    inputs = {"knowledge": cfg.encode(knowledge), "punctuality": cfg.encode(punctuality)}
    return _weighted(cfg.performance_weights, inputs)


def score_performance(knowledge: Level, punctuality: Level, cfg: HierarchyConfig) -> Level:
    """Performance level from the encoded knowledge and punctuality levels."""
    return level_for(performance_score(knowledge, punctuality, cfg), cfg)


def overall_ranking(
    performance: Level,
    coaching: bool,
    cfg: HierarchyConfig,
    punctuality: Optional[Level] = None,
) -> Tuple[Level, float]:
    """Combine performance and coaching (and optionally class attendance) into (level, score)."""
    inputs = {
        "performance": cfg.encode(performance),
        "coaching": cfg.encode(Level.HIGH if coaching else Level.LOW),
    }
    if cfg.overall_weights.get("classes", 0.0) > 0:
        if punctuality is None:
            raise InvalidArgumentError("overall_weights uses 'classes' but no punctuality level was given")
        inputs["classes"] = cfg.encode(punctuality)
    else:
        inputs["classes"] = 0.0
    score = _weighted(cfg.overall_weights, inputs)
    return level_for(score, cfg), score


def rank_student(record: StudentRecord, cfg: HierarchyConfig) -> RankingResult:
    knowledge = score_knowledge(record, cfg)
    punctuality = score_punctuality(record, cfg)
    performance = score_performance(knowledge, punctuality, cfg)
    overall, score = overall_ranking(performance, record.coaching, cfg, punctuality)
    return RankingResult(record.student_id, knowledge, punctuality, performance, overall, score)


def rank_dataset(ds: Dataset, cfg: HierarchyConfig) -> List[RankingResult]:
    """Rank every student, in dataset order."""
    return [rank_student(r, cfg) for r in ds.rows]


def _fractions(levels: List[Level]) -> Dict[str, float]:
    total = len(levels)
    return {
        level.value: levels.count(level) / total
        for level in LEVEL_ORDER
        if level in levels
    }


def cohort_report(ds: Dataset, cfg: HierarchyConfig) -> Dict[int, Dict[str, float]]:
    """Per academic year, the fraction of students at each overall level (observed levels only)."""
    if not ds.rows:
        raise InsufficientDataError("cohort report needs at least one student")
    by_year: Dict[int, List[Level]] = {}
    for record, ranking in zip(ds.rows, rank_dataset(ds, cfg)):
        by_year.setdefault(record.academic_year, []).append(ranking.overall)
    return {year: _fractions(by_year[year]) for year in sorted(by_year)}


def coaching_report(ds: Dataset, cfg: HierarchyConfig) -> Dict[Tuple[int, str], Dict[str, float]]:
    """Overall-level fractions per (academic year, coaching yes/no)."""
    if not ds.rows:
        raise InsufficientDataError("coaching report needs at least one student")
    groups: Dict[Tuple[int, str], List[Level]] = {}
    for record, ranking in zip(ds.rows, rank_dataset(ds, cfg)):
        key = (record.academic_year, "yes" if record.coaching else "no")
        groups.setdefault(key, []).append(ranking.overall)
    return {key: _fractions(groups[key]) for key in sorted(groups)}
