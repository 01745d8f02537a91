#!/usr/bin/env python3
import json
import os

import pytest

from src.config import DEFAULT_CONFIG_PATH, ToolkitConfig, load_config

FILES_NEEDED = ["run.py", "requirements.txt", "data/config.json", "src/__init__.py"]
DIRS_NEEDED = ["data", "src"]
ROOT = os.path.dirname(os.path.abspath(__file__))


@pytest.mark.parametrize("name", FILES_NEEDED)
def test_required_file_exists(name):
    assert os.path.exists(os.path.join(ROOT, name)), name


@pytest.mark.parametrize("name", DIRS_NEEDED)
def test_required_dir_exists(name):
    assert os.path.isdir(os.path.join(ROOT, name)), name


def test_bundled_config_matches_defaults():
    cfg = load_config(DEFAULT_CONFIG_PATH)
    defaults = ToolkitConfig()
    # the file spells 0.85 / 3 out to 16 digits
    assert cfg.hierarchy.knowledge_weights == pytest.approx(defaults.hierarchy.knowledge_weights)
    assert cfg.model_copy(update={"hierarchy": defaults.hierarchy}) == defaults
    assert cfg.hierarchy.knowledge_weights["quiz"] == 0.15


def test_bundled_config_is_plain_json():
    with open(DEFAULT_CONFIG_PATH, encoding="utf-8") as f:
        payload = json.load(f)
    assert set(payload) == {"seed", "schema", "bands", "synth", "kmeans", "nbayes", "split", "hierarchy"}


def test_importing_config_creates_no_directories():
    import src.config

    assert not hasattr(src.config, "RAW_DIR")
    assert not os.path.isdir(os.path.join(ROOT, "data", "raw"))


if __name__ == "__main__":
    print("Testing setup...")
    for name in FILES_NEEDED:
        exists = os.path.exists(os.path.join(ROOT, name))
        print(f"{'✅' if exists else '❌'} {name}: {exists}")
    for name in DIRS_NEEDED:
        exists = os.path.isdir(os.path.join(ROOT, name))
        print(f"{'✅' if exists else '❌'} {name}/: {exists}")
    cfg = load_config()
    print(f"\nConfig: seed={cfg.seed}, k={cfg.kmeans.k}, bands for {', '.join(cfg.bands)}")