"""Deterministic synthetic cohort generator.

Produces raw CSV rows whose cleaning counts, missing-cell total and per-year GPA
ranges match the published marginals of the departmental dataset.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.dataset import ID_COLUMN, RawRecord
from src.errors import InvalidConfigError

logger = logging.getLogger(__name__)

SCORE_COLUMNS = ("quiz", "assignment", "discussion", "lab", "attendance")
# stage-1 rows lose a required field first; every other non-id column can be blanked afterwards
STAGE1_COLUMNS = ("academic_year", "gpa")
BLANKABLE = ("academic_year", "semester") + SCORE_COLUMNS + ("gpa", "coaching")
STAGE2_COLUMNS = tuple(c for c in BLANKABLE if c not in STAGE1_COLUMNS)


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_records: int = Field(660, ge=0)
    missing_cells: int = Field(160, ge=0)
    stage1_removals: int = Field(69, ge=0)
    stage2_removals: int = Field(91, ge=0)
    gpa_ranges: Dict[int, Tuple[float, float]] = Field(
        default_factory=lambda: {
            1: (2.82, 3.195),
            2: (2.97, 3.029),
            3: (2.97, 2.98),
            4: (2.96, 2.985),
        }
    )
    # score windows by GPA tercile within the year's range (low, medium, high)
    score_windows: Tuple[Tuple[float, float], ...] = ((40.0, 80.0), (50.0, 90.0), (60.0, 100.0))
    coaching_rates: Tuple[float, float, float] = (0.3, 0.5, 0.7)
    seed: int = 42

    @model_validator(mode="after")
    def _check(self) -> "SynthConfig":
        removals = self.stage1_removals + self.stage2_removals
        if removals and removals >= self.n_records:
            raise ValueError("stage1_removals + stage2_removals must be below n_records")
        if not self.gpa_ranges:
            raise ValueError("gpa_ranges must name at least one academic year")
        for year, (low, high) in self.gpa_ranges.items():
            if year not in (1, 2, 3, 4):
                raise ValueError(f"gpa_ranges: unknown academic year {year}")
            if not 0.0 <= low <= high <= 4.0:
                raise ValueError(f"gpa_ranges[{year}] must satisfy 0 <= min <= max <= 4")
        if len(self.score_windows) != 3:
            raise ValueError("score_windows needs one window per GPA tercile")
        for low, high in self.score_windows:
            if not 0.0 <= low <= high <= 100.0:
                raise ValueError("score windows must lie inside [0, 100]")
        if any(not 0.0 <= p <= 1.0 for p in self.coaching_rates):
            raise ValueError("coaching_rates must be probabilities")
        return self


def _check_feasible(cfg: SynthConfig) -> None:
    removals = cfg.stage1_removals + cfg.stage2_removals
    if cfg.missing_cells < removals:
        raise InvalidConfigError(
            f"missing_cells={cfg.missing_cells} cannot cover {removals} removed rows"
        )
    capacity = cfg.stage1_removals * len(BLANKABLE) + cfg.stage2_removals * len(STAGE2_COLUMNS)
    if cfg.missing_cells > capacity:
        raise InvalidConfigError(
            f"missing_cells={cfg.missing_cells} exceeds the {capacity} cells the removed rows can hold"
        )


def _complete_row(rng: np.random.Generator, cfg: SynthConfig, index: int) -> Dict[str, str]:
    years = sorted(cfg.gpa_ranges)
    year = int(years[rng.integers(len(years))])
    semester = 2 * year - int(rng.integers(2))
    low, high = cfg.gpa_ranges[year]
    gpa = round(float(rng.uniform(low, high)), 3)
    gpa = min(max(gpa, low), high)
    position = 0.0 if high == low else (gpa - low) / (high - low)
    tercile = min(int(position * 3), 2)
    window = cfg.score_windows[tercile]

    row = {
        ID_COLUMN: f"S{index + 1:04d}",
        "academic_year": str(year),
        "semester": str(semester),
    }
    for column in SCORE_COLUMNS:
        row[column] = f"{rng.uniform(*window):.1f}"
    row["gpa"] = f"{gpa:.3f}"
    row["coaching"] = "yes" if rng.random() < cfg.coaching_rates[tercile] else "no"
    return row


def _blank_plan(rng: np.random.Generator, cfg: SynthConfig) -> Dict[int, List[str]]:
    """Map row index -> columns to blank."""
    order = rng.permutation(cfg.n_records)
    stage1_rows = [int(i) for i in order[: cfg.stage1_removals]]
    stage2_rows = [int(i) for i in order[cfg.stage1_removals : cfg.stage1_removals + cfg.stage2_removals]]

    plan: Dict[int, List[str]] = {}
    for i in stage1_rows:
        plan[i] = [STAGE1_COLUMNS[rng.integers(len(STAGE1_COLUMNS))]]
    for i in stage2_rows:
        plan[i] = [STAGE2_COLUMNS[rng.integers(len(STAGE2_COLUMNS))]]

    extra = cfg.missing_cells - len(plan)
    stage1_set = set(stage1_rows)
    while extra > 0:
        for i in stage1_rows + stage2_rows:
            if extra == 0:
                break
            pool = BLANKABLE if i in stage1_set else STAGE2_COLUMNS
            free = [c for c in pool if c not in plan[i]]
            if free:
                plan[i].append(free[rng.integers(len(free))])
                extra -= 1
    return plan


def generate(cfg: SynthConfig) -> List[RawRecord]:
    """Generate ``cfg.n_records`` raw rows; deterministic in ``cfg.seed``."""
    _check_feasible(cfg)
    rng = np.random.default_rng(cfg.seed)
    rows = [_complete_row(rng, cfg, i) for i in range(cfg.n_records)]
    plan = _blank_plan(rng, cfg) if cfg.n_records else {}
    for i, columns in plan.items():
        for column in columns:
            rows[i][column] = None

    logger.info(
        f"Generated {cfg.n_records} rows with {cfg.missing_cells} missing cells "
        f"({cfg.stage1_removals} stage-1 and {cfg.stage2_removals} stage-2 removals)"
    )
    return [RawRecord(row, line_number=i + 2) for i, row in enumerate(rows)]

