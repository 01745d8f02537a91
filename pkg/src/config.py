import hashlib
import json
import os
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.dataset import DEFAULT_BANDS, Band, FeatureSchema, default_schema, validate_bands
from src.errors import ConfigNotFoundError, InvalidBandsError, InvalidConfigError
from src.hierarchy import HierarchyConfig
from src.synth import SynthConfig

load_dotenv()

# Paths - go up one level from src to the repo root, then into data
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
PROCESSED_DIR = DATA_DIR / "processed"
DEFAULT_CONFIG_PATH = DATA_DIR / "config.json"

# Optional override of the config file (no environment variable is required)
CONFIG_ENV_VAR = "EDM_CONFIG"

# Randomness - every stochastic step derives from this seed unless --seed is given
DEFAULT_SEED = 42

# k-means settings (k = 3 gives the C1/C2/C3 clusters)
DEFAULT_K = 3
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-6
DEFAULT_RESTARTS = 10

# Naive Bayes settings
DEFAULT_ALPHA = 1.0  # Laplace pseudo-count
DEFAULT_VARIANCE_FLOOR = 1e-9

DEFAULT_TRAIN_FRACTION = 0.8


class KMeansSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(DEFAULT_K, ge=1)
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    tol: float = Field(DEFAULT_TOL, ge=0)
    restarts: int = Field(DEFAULT_RESTARTS, ge=1)


class NBayesSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(DEFAULT_ALPHA, ge=0)
    variance_floor: float = Field(DEFAULT_VARIANCE_FLOOR, gt=0)


class SplitSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_fraction: float = Field(DEFAULT_TRAIN_FRACTION, gt=0, lt=1)


class ToolkitConfig(BaseModel):
    """Everything a run reads from the config file. Every section has defaults."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    seed: int = DEFAULT_SEED
    data_schema: FeatureSchema = Field(default_factory=default_schema, alias="schema")
    bands: Dict[str, Tuple[Band, ...]] = Field(default_factory=lambda: dict(DEFAULT_BANDS))
    synth: SynthConfig = Field(default_factory=SynthConfig)
    kmeans: KMeansSettings = Field(default_factory=KMeansSettings)
    nbayes: NBayesSettings = Field(default_factory=NBayesSettings)
    split: SplitSettings = Field(default_factory=SplitSettings)
    hierarchy: HierarchyConfig = Field(default_factory=HierarchyConfig)

    @model_validator(mode="after")
    def _check_bands(self) -> "ToolkitConfig":
        try:
            validate_bands(self.data_schema, self.bands)
        except InvalidBandsError as e:
            raise ValueError(str(e)) from e
        return self


def load_config(path: Optional[Union[str, Path]] = None) -> ToolkitConfig:
    """Load the toolkit config.

    Lookup order: explicit ``path``, then $EDM_CONFIG, then data/config.json when it exists,
    then built-in defaults.
    """
    if path is None:
        env_path = os.getenv(CONFIG_ENV_VAR)
        if env_path:
            path = env_path
        elif DEFAULT_CONFIG_PATH.exists():
            path = DEFAULT_CONFIG_PATH
        else:
            return ToolkitConfig()

    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(f"config file not found: {path}")
    try:
        return ToolkitConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except UnicodeDecodeError as e:
        raise InvalidConfigError(f"{path.name}: not valid UTF-8") from e
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise InvalidConfigError(f"{path.name}: {location}: {first['msg']}") from e


def config_fingerprint(cfg: ToolkitConfig) -> str:
    payload = json.dumps(cfg.model_dump(mode="json", by_alias=True), sort_keys=True)
    return hashlib.md5(payload.encode()).hexdigest()[:12]

