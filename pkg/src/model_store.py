"""On-disk documents: the Naive Bayes model file and per-run manifests."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.dataset import Band, FeatureSchema, FeatureSpec, schema_fingerprint
from src.errors import ModelFormatError
from src.nbayes import NaiveBayesModel

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


class CategoricalEntry(BaseModel):
    feature: str
    cls: str = Field(alias="class")
    probabilities: Dict[str, float]

    model_config = ConfigDict(populate_by_name=True)


class GaussianEntry(BaseModel):
    feature: str
    cls: str = Field(alias="class")
    mean: float
    variance: float

    model_config = ConfigDict(populate_by_name=True)


class ModelDocument(BaseModel):
    """Versioned JSON form of a NaiveBayesModel, plus the bands applied before training."""

    format_version: int
    schema_fingerprint: str
    label: str
    classes: List[str]
    priors: Dict[str, float]
    features: List[FeatureSpec]
    categorical_tables: List[CategoricalEntry]
    gaussians: List[GaussianEntry]
    alpha: float
    variance_floor: float
    bands: Optional[Dict[str, Tuple[Band, ...]]] = None


def to_document(model: NaiveBayesModel, bands: Optional[Dict[str, Tuple[Band, ...]]] = None) -> ModelDocument:
    return ModelDocument(
        format_version=MODEL_FORMAT_VERSION,
        schema_fingerprint=model.schema_fingerprint,
        label=model.label,
        classes=list(model.classes),
        priors={c: model.priors[c] for c in model.classes},
        features=list(model.features),
        categorical_tables=[
            CategoricalEntry(feature=f, cls=c, probabilities=dict(table))
            for (f, c), table in model.categorical_tables.items()
        ],
        gaussians=[
            GaussianEntry(feature=f, cls=c, mean=mean, variance=variance)
            for (f, c), (mean, variance) in model.gaussians.items()
        ],
        alpha=model.alpha,
        variance_floor=model.variance_floor,
        bands=bands,
    )


def from_document(doc: ModelDocument) -> NaiveBayesModel:
    if doc.format_version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {doc.format_version}")
    tables = {(e.feature, e.cls): dict(e.probabilities) for e in doc.categorical_tables}
    gaussians = {(e.feature, e.cls): (e.mean, e.variance) for e in doc.gaussians}
    if set(doc.priors) != set(doc.classes):
        raise ModelFormatError("priors do not match the class list")
    for spec in doc.features:
        entries = tables if spec.kind == "categorical" else gaussians
        for cls in doc.classes:
            if (spec.name, cls) not in entries:
                raise ModelFormatError(f"no {spec.kind} entry for {spec.name} | {cls}")
    return NaiveBayesModel(
        classes=tuple(doc.classes),
        priors=dict(doc.priors),
        features=tuple(doc.features),
        categorical_tables=tables,
        gaussians=gaussians,
        alpha=doc.alpha,
        variance_floor=doc.variance_floor,
        label=doc.label,
        schema_fingerprint=doc.schema_fingerprint,
    )


def save_model(
    model: NaiveBayesModel,
    path: Union[str, Path],
    bands: Optional[Dict[str, Tuple[Band, ...]]] = None,
) -> None:
    """Write the model document as indented JSON."""
    document = to_document(model, bands)
    Path(path).write_text(document.model_dump_json(indent=2, by_alias=True) + "\n", encoding="utf-8")
    logger.info(f"Model saved to {path}")


def load_model(
    path: Union[str, Path], schema: Optional[FeatureSchema] = None
) -> Tuple[NaiveBayesModel, ModelDocument]:
    """Load a model file. With ``schema``, refuse a model trained on a different schema."""
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"model file not found: {path}")
    try:
        document = ModelDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ModelFormatError(f"{path.name} is not a model document: {e.errors()[0]['msg']}") from e
    if schema is not None and schema_fingerprint(schema) != document.schema_fingerprint:
        raise ModelFormatError(
            f"{path.name} was trained on schema {document.schema_fingerprint}, "
            f"input uses {schema_fingerprint(schema)}"
        )
    return from_document(document), document


class RunManifest(BaseModel):
    """One per command run; holds file names (not directories) so reruns are byte-identical."""

    command: str
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    seed: Optional[int] = None
    config_fingerprint: str
    counts: Dict[str, int] = Field(default_factory=dict)
    metrics: Dict[str, float] = Field(default_factory=dict)


def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    """Write ``<command>_manifest.json`` into ``out_dir`` and return its path."""
    path = Path(out_dir) / f"{manifest.command}_manifest.json"
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
