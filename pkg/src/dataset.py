"""Student record schema, CSV parsing, two-stage cleaning, discretization and splitting."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Literal, Mapping, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import (
    DataError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidBandsError,
    MalformedRowError,
    SchemaMismatchError,
)

logger = logging.getLogger(__name__)

Value = Union[int, float, str]

MISSING_TOKENS = {"", "NA"}
ID_COLUMN = "student_id"
LEVELS = ("low", "medium", "high")


# --------------------------- Schema ------------------------------------------
class FeatureSpec(BaseModel):
    """One declared column: categorical with a closed category set, or numeric with inclusive bounds."""

    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["categorical", "numeric"]
    categories: Optional[Tuple[str, ...]] = None
    bounds: Optional[Tuple[float, float]] = None
    integer: bool = False

    @model_validator(mode="after")
    def _check_domain(self) -> "FeatureSpec":
        if self.kind == "categorical":
            if not self.categories:
                raise ValueError(f"categorical feature {self.name!r} needs a non-empty category set")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"categorical feature {self.name!r} repeats a category")
        else:
            if self.bounds is None:
                raise ValueError(f"numeric feature {self.name!r} needs bounds")
            if self.bounds[0] > self.bounds[1]:
                raise ValueError(f"numeric feature {self.name!r} has min > max")
        return self

    def coerce(self, text: str) -> Value:
        """Parse a cell and check it against the domain. Raises ValueError when it does not fit."""
        if self.kind == "categorical":
            if text not in self.categories:
                raise ValueError(f"{self.name}={text!r} not in {list(self.categories)}")
            return text
        number = float(text)
        if not math.isfinite(number):
            raise ValueError(f"{self.name}={text!r} is not finite")
        if self.integer:
            if not number.is_integer():
                raise ValueError(f"{self.name}={text!r} is not an integer")
            number = int(number)
        low, high = self.bounds
        if not low <= number <= high:
            raise ValueError(f"{self.name}={text!r} outside [{low}, {high}]")
        return number

    def contains(self, value: Value) -> bool:
        if self.kind == "categorical":
            return value in self.categories
        if isinstance(value, str) or value is None:
            return False
        return self.bounds[0] <= value <= self.bounds[1]


class FeatureSchema(BaseModel):
    """Ordered feature declarations, the label column and the stage-1 required columns."""

    model_config = ConfigDict(frozen=True)

    features: Tuple[FeatureSpec, ...]
    label: str = "cluster_label"
    required: Tuple[str, ...] = (ID_COLUMN, "academic_year", "gpa")
    id_column: str = ID_COLUMN

    @model_validator(mode="after")
    def _check_names(self) -> "FeatureSchema":
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if self.id_column in names:
            raise ValueError(f"{self.id_column!r} is the id column, not a feature")
        unknown = set(self.required) - set(names) - {self.id_column}
        if unknown:
            raise ValueError(f"required columns not declared: {sorted(unknown)}")
        if self.label == self.id_column:
            raise ValueError("label cannot be the id column")
        return self

    @property
    def names(self) -> List[str]:
        return [f.name for f in self.features]

    @property
    def columns(self) -> List[str]:
        return [self.id_column] + self.names

    def feature(self, name: str) -> FeatureSpec:
        for spec in self.features:
            if spec.name == name:
                return spec
        raise InvalidArgumentError(f"unknown feature {name!r}")

    def has_feature(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def numeric_names(self) -> List[str]:
        return [f.name for f in self.features if f.kind == "numeric"]

    def with_label(self, label: str) -> "FeatureSchema":
        return self.model_copy(update={"label": label})


def _score(name: str) -> FeatureSpec:
    return FeatureSpec(name=name, kind="numeric", bounds=(0.0, 100.0))


DEFAULT_FEATURES: Tuple[FeatureSpec, ...] = (
    FeatureSpec(name="academic_year", kind="numeric", bounds=(1, 4), integer=True),
    FeatureSpec(name="semester", kind="numeric", bounds=(1, 8), integer=True),
    _score("quiz"),
    _score("assignment"),
    _score("discussion"),
    _score("lab"),
    _score("attendance"),
    FeatureSpec(name="gpa", kind="numeric", bounds=(0.0, 4.0)),
    FeatureSpec(name="coaching", kind="categorical", categories=("yes", "no")),
)


def default_schema() -> FeatureSchema:
    return FeatureSchema(features=DEFAULT_FEATURES)


def schema_fingerprint(schema: FeatureSchema) -> str:
    payload = json.dumps(schema.model_dump(mode="json"), sort_keys=True)
    return hashlib.md5(payload.encode()).hexdigest()[:12]


# --------------------------- Bands -------------------------------------------
class Band(BaseModel):
    """Inclusive-exclusive interval [lower, upper); the last band of a feature is closed at the top."""

    model_config = ConfigDict(frozen=True)

    label: str
    lower: float
    upper: float


BandSpec = Dict[str, Tuple[Band, ...]]


def _three_bands(edges: Sequence[float]) -> Tuple[Band, ...]:
    return tuple(
        Band(label=label, lower=lower, upper=upper)
        for label, lower, upper in zip(LEVELS, edges[:-1], edges[1:])
    )


DEFAULT_BANDS: BandSpec = {
    "gpa": _three_bands((0.0, 2.5, 3.0, 4.0)),
    "attendance": _three_bands((0.0, 60.0, 85.0, 100.0)),
}


def validate_bands(schema: FeatureSchema, bands: Mapping[str, Sequence[Band]]) -> None:
    """Check every band list is contiguous and spans its numeric feature's declared range exactly."""
    for name, feature_bands in bands.items():
        if not schema.has_feature(name):
            raise InvalidBandsError(f"bands given for unknown feature {name!r}")
        spec = schema.feature(name)
        if spec.kind != "numeric":
            raise InvalidBandsError(f"bands given for categorical feature {name!r}")
        if not feature_bands:
            raise InvalidBandsError(f"empty band list for {name!r}")
        labels = [b.label for b in feature_bands]
        if len(set(labels)) != len(labels):
            raise InvalidBandsError(f"{name}: band labels must be unique")
        low, high = spec.bounds
        if feature_bands[0].lower != low or feature_bands[-1].upper != high:
            raise InvalidBandsError(
                f"{name}: bands span [{feature_bands[0].lower}, {feature_bands[-1].upper}], "
                f"declared range is [{low}, {high}]"
            )
        for band in feature_bands:
            if band.lower >= band.upper:
                raise InvalidBandsError(f"{name}: band {band.label!r} is empty or inverted")
        for prev, nxt in zip(feature_bands, feature_bands[1:]):
            if prev.upper < nxt.lower:
                raise InvalidBandsError(f"{name}: gap between {prev.label!r} and {nxt.label!r}")
            if prev.upper > nxt.lower:
                raise InvalidBandsError(f"{name}: {prev.label!r} overlaps {nxt.label!r}")


def band_label(bands: Sequence[Band], value: float) -> str:
    """Label of the band holding ``value``; a value on a boundary belongs to the upper band."""
    inner = np.array([b.lower for b in bands[1:]], dtype=float)
    return bands[int(np.searchsorted(inner, value, side="right"))].label


# --------------------------- Records -----------------------------------------
@dataclass(frozen=True)
class RawRecord:
    """One parsed CSV row. A value of None marks a missing cell."""

    values: Mapping[str, Optional[str]]
    line_number: int = 0
    unparseable: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))

    def get(self, column: str) -> Optional[str]:
        return self.values.get(column)

    @property
    def missing_count(self) -> int:
        return sum(1 for v in self.values.values() if v is None)


@dataclass(frozen=True)
class StudentRecord:
    """A cleaned row: every declared column present and inside its domain."""

    student_id: str
    values: Mapping[str, Value]

    def __post_init__(self):
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))

    def __getitem__(self, column: str) -> Value:
        return self.values[column]

    def get(self, column: str, default: Optional[Value] = None) -> Optional[Value]:
        return self.values.get(column, default)

    def with_values(self, **updates: Value) -> "StudentRecord":
        return StudentRecord(self.student_id, {**self.values, **updates})

    @property
    def academic_year(self) -> int:
        return int(self.values["academic_year"])

    @property
    def semester(self) -> int:
        return int(self.values["semester"])

    @property
    def quiz(self) -> float:
        return float(self.values["quiz"])

    @property
    def assignment(self) -> float:
        return float(self.values["assignment"])

    @property
    def discussion(self) -> float:
        return float(self.values["discussion"])

    @property
    def lab(self) -> float:
        return float(self.values["lab"])

    @property
    def attendance(self) -> float:
        return float(self.values["attendance"])

    @property
    def gpa(self) -> float:
        return float(self.values["gpa"])

    @property
    def coaching(self) -> bool:
        return self.values["coaching"] == "yes"

    @property
    def cluster_label(self) -> Optional[str]:
        value = self.values.get("cluster_label")
        return None if value is None else str(value)


def format_value(value: Value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Dataset:
    """Schema plus rows in insertion order. Rows are validated against the schema on construction."""

    schema: FeatureSchema
    rows: Tuple[StudentRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            for spec in self.schema.features:
                value = row.get(spec.name)
                if value is None or not spec.contains(value):
                    raise DataError(f"row {row.student_id}: {spec.name}={value!r} violates the schema")

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[StudentRecord]:
        return iter(self.rows)

    def with_rows(self, rows: Iterable[StudentRecord]) -> "Dataset":
        return Dataset(self.schema, tuple(rows))

    def column(self, name: str) -> List[Value]:
        return [row[name] for row in self.rows]

    def has_column(self, name: str) -> bool:
        return bool(self.rows) and all(name in row.values for row in self.rows)

    def output_columns(self) -> List[str]:
        columns = self.schema.columns
        extras = []
        for row in self.rows:
            for key in row.values:
                if key not in columns and key not in extras:
                    extras.append(key)
        return columns + extras

    def to_frame(self) -> pd.DataFrame:
        columns = self.output_columns()
        records = [{self.schema.id_column: row.student_id, **row.values} for row in self.rows]
        return pd.DataFrame.from_records(records, columns=columns)

    def to_raw_records(self) -> List[RawRecord]:
        columns = self.output_columns()
        raws = []
        for row in self.rows:
            values = {self.schema.id_column: row.student_id}
            values.update({c: format_value(row.values[c]) for c in columns[1:] if c in row.values})
            raws.append(RawRecord(values))
        return raws


# --------------------------- Parsing -----------------------------------------
def _normalize_cell(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    text = text.strip()
    return None if text in MISSING_TOKENS else text


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_csv(text: Union[str, TextIO], schema: FeatureSchema) -> List[RawRecord]:
    """Parse CSV text into raw records.

    Empty cells and "NA" become missing. Unparseable numeric cells also become missing
    and are listed in ``RawRecord.unparseable``. Columns outside the schema are ignored;
    the label column is kept when the header has it.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    header = [h.strip() for h in header]

    absent = [c for c in schema.required if c not in header]
    if absent:
        raise SchemaMismatchError(f"header is missing required column(s): {', '.join(absent)}")
    ignored = [c for c in header if c not in schema.columns and c != schema.label]
    if ignored:
        logger.debug(f"Ignoring columns outside the schema: {ignored}")

    numeric = set(schema.numeric_names())
    keep_label = schema.label in header
    records = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRowError(reader.line_num, len(header), len(row))
        cells = dict(zip(header, row))
        values: Dict[str, Optional[str]] = {}
        unparseable = set()
        for column in schema.columns:
            value = _normalize_cell(cells.get(column))
            if value is not None and column in numeric and not _is_number(value):
                unparseable.add(column)
                value = None
            values[column] = value
        if keep_label:
            values[schema.label] = _normalize_cell(cells[schema.label])
        records.append(RawRecord(values, reader.line_num, frozenset(unparseable)))

    bad = sum(len(r.unparseable) for r in records)
    if bad:
        logger.warning(f"{bad} unparseable numeric cell(s) treated as missing")
    logger.info(f"Parsed {len(records)} rows")
    return records


def read_csv_file(path: Union[str, Path], schema: FeatureSchema) -> List[RawRecord]:
    """Read a UTF-8 CSV file into raw records."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return parse_csv(f, schema)


def write_raw_csv(raws: Sequence[RawRecord], schema: FeatureSchema, path: Union[str, Path]) -> None:
    """Write raw records in schema column order; missing cells are written empty."""
    columns = list(schema.columns)
    if any(schema.label in r.values for r in raws):
        columns.append(schema.label)
    frame = pd.DataFrame.from_records([dict(r.values) for r in raws], columns=columns)
    frame.to_csv(path, index=False, lineterminator="\n")


def write_dataset_csv(ds: Dataset, path: Union[str, Path]) -> None:
    """Write a typed dataset as CSV, one row per record."""
    ds.to_frame().to_csv(path, index=False, lineterminator="\n")


# --------------------------- Cleaning ----------------------------------------
class CleaningReport(BaseModel):
    """Audited record counts for each cleaning stage."""

    model_config = ConfigDict(frozen=True)

    input_count: int
    stage1_removed: int
    stage1_remaining: int
    stage2_removed: int
    clean_count: int
    missing_cells: int
    unparseable_cells: int = 0
    missing_by_column: Dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _reconcile(self) -> "CleaningReport":
        if self.input_count - self.stage1_removed != self.stage1_remaining:
            raise ValueError("stage 1 counts do not reconcile")
        if self.stage1_remaining - self.stage2_removed != self.clean_count:
            raise ValueError("stage 2 counts do not reconcile")
        return self


def _stage1_reason(raw: RawRecord, schema: FeatureSchema) -> Optional[str]:
    for column in schema.required:
        if raw.get(column) is None:
            return f"missing required {column}"
    for spec in schema.features:
        text = raw.get(spec.name)
        if text is None:
            continue
        try:
            spec.coerce(text)
        except ValueError as e:
            return str(e)
    if schema.has_feature("academic_year") and schema.has_feature("semester"):
        year, semester = raw.get("academic_year"), raw.get("semester")
        if year is not None and semester is not None:
            y, s = int(float(year)), int(float(semester))
            if s not in (2 * y - 1, 2 * y):
                return f"semester {s} inconsistent with academic year {y}"
    return None


def _to_student(raw: RawRecord, schema: FeatureSchema) -> StudentRecord:
    values: Dict[str, Value] = {spec.name: spec.coerce(raw.get(spec.name)) for spec in schema.features}
    if schema.label in raw.values:
        values[schema.label] = raw.get(schema.label)
    return StudentRecord(raw.get(schema.id_column), values)


def clean(raws: Sequence[RawRecord], schema: FeatureSchema) -> Tuple[Dataset, CleaningReport]:
    """Two-stage removal: stage 1 drops rows with missing or invalid required/typed values,
    stage 2 drops rows with any remaining missing cell. Never imputes."""
    missing_by_column: Dict[str, int] = {}
    for raw in raws:
        for column, value in raw.values.items():
            if value is None:
                missing_by_column[column] = missing_by_column.get(column, 0) + 1

    stage1 = []
    for raw in raws:
        reason = _stage1_reason(raw, schema)
        if reason is None:
            stage1.append(raw)
        else:
            logger.debug(f"stage 1 removed line {raw.line_number}: {reason}")

    stage2 = [raw for raw in stage1 if raw.missing_count == 0]
    rows = tuple(_to_student(raw, schema) for raw in stage2)

    report = CleaningReport(
        input_count=len(raws),
        stage1_removed=len(raws) - len(stage1),
        stage1_remaining=len(stage1),
        stage2_removed=len(stage1) - len(stage2),
        clean_count=len(stage2),
        missing_cells=sum(missing_by_column.values()),
        unparseable_cells=sum(len(r.unparseable) for r in raws),
        missing_by_column=dict(sorted(missing_by_column.items())),
    )
    logger.info(
        f"Cleaning: {report.input_count} → {report.stage1_remaining} → {report.clean_count} "
        f"({report.missing_cells} missing cells)"
    )
    return Dataset(schema, rows), report


# --------------------------- Transformation ----------------------------------
def discretize(ds: Dataset, bands: Mapping[str, Sequence[Band]]) -> Dataset:
    """Replace each banded numeric feature by its band label. Other features are unchanged."""
    validate_bands(ds.schema, bands)
    features = []
    for spec in ds.schema.features:
        if spec.name in bands:
            categories = tuple(b.label for b in bands[spec.name])
            features.append(FeatureSpec(name=spec.name, kind="categorical", categories=categories))
        else:
            features.append(spec)
    schema = ds.schema.model_copy(update={"features": tuple(features)})
    rows = [
        row.with_values(**{name: band_label(bands[name], row[name]) for name in bands})
        for row in ds.rows
    ]
    return Dataset(schema, tuple(rows))


def split(ds: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle, then prefix/suffix split into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if not ds.rows:
        raise InsufficientDataError("cannot split an empty dataset")
    order = np.random.default_rng(seed).permutation(len(ds))
    n_train = int(math.floor(len(ds) * train_fraction + 1e-9))
    train = ds.with_rows(ds.rows[i] for i in order[:n_train])
    test = ds.with_rows(ds.rows[i] for i in order[n_train:])
    return train, test


class StudentDataLoader:
    """Reads a student CSV and returns the cleaned dataset with its report."""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema

    def load(self, path: Union[str, Path]) -> Tuple[Dataset, CleaningReport]:
        logger.info(f"Loading {Path(path).name}...")
        raws = read_csv_file(path, self.schema)
        return clean(raws, self.schema)
