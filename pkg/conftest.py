from typing import Dict, List

import pytest

from src.dataset import RawRecord, clean, default_schema, write_raw_csv
from src.synth import SynthConfig, generate

HEADER = "student_id,academic_year,semester,quiz,assignment,discussion,lab,attendance,gpa,coaching"


def complete_row(i: int = 1, **overrides: str) -> Dict[str, str]:
    row = {
        "student_id": f"S{i:04d}",
        "academic_year": "1",
        "semester": "1",
        "quiz": "80",
        "assignment": "70",
        "discussion": "60",
        "lab": "90",
        "attendance": "95",
        "gpa": "3.10",
        "coaching": "yes",
    }
    row.update(overrides)
    return row


def csv_text(rows: List[Dict[str, str]], header: str = HEADER) -> str:
    columns = header.split(",")
    lines = [header] + [",".join(row.get(c, "") for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def raw_cohort() -> List[RawRecord]:
    return generate(SynthConfig())


@pytest.fixture(scope="session")
def clean_cohort(raw_cohort, schema):
    ds, _ = clean(raw_cohort, schema)
    return ds


@pytest.fixture
def cohort_csv(tmp_path, raw_cohort, schema):
    path = tmp_path / "cohort_raw.csv"
    write_raw_csv(raw_cohort, schema, path)
    return path
