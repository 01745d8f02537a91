import json

import pytest

from src.config import CONFIG_ENV_VAR, ToolkitConfig, config_fingerprint, load_config
from src.errors import ConfigNotFoundError, InvalidConfigError


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_partial_config_falls_back_to_defaults(tmp_path):
    cfg = load_config(_write(tmp_path / "cfg.json", {"seed": 7, "kmeans": {"k": 4}}))
    assert cfg.seed == 7
    assert cfg.kmeans.k == 4
    assert cfg.kmeans.restarts == ToolkitConfig().kmeans.restarts
    assert cfg.synth.n_records == 660


def test_env_var_names_the_config(tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, str(_write(tmp_path / "env.json", {"seed": 99})))
    assert load_config().seed == 99


def test_missing_file():
    with pytest.raises(ConfigNotFoundError) as exc:
        load_config("does/not/exist.json")
    assert exc.value.exit_code == 2


@pytest.mark.parametrize(
    "payload",
    [
        {"kmeans": {"k": 0}},
        {"split": {"train_fraction": 1.0}},
        {"hierarchy": {"performance_weights": {"knowledge": 0.7, "punctuality": 0.7}}},
        {"bands": {"gpa": [{"label": "low", "lower": 0, "upper": 2}, {"label": "high", "lower": 2.5, "upper": 4}]}},
        {"bands": {"coaching": [{"label": "low", "lower": 0, "upper": 1}]}},
    ],
)
def test_invalid_sections(tmp_path, payload):
    with pytest.raises(InvalidConfigError) as exc:
        load_config(_write(tmp_path / "bad.json", payload))
    assert exc.value.exit_code == 2


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json", encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        load_config(path)


def test_non_utf8_file_is_invalid_config(tmp_path):
    path = tmp_path / "latin1.json"
    path.write_bytes(b"{\"label\": \"\xe9l\xe8ve\"}")
    with pytest.raises(InvalidConfigError, match="not valid UTF-8") as exc:
        load_config(path)
    assert exc.value.exit_code == 2


def test_custom_schema_and_label(tmp_path):
    payload = {
        "schema": {
            "label": "band",
            "required": ["student_id", "score"],
            "features": [{"name": "score", "kind": "numeric", "bounds": [0, 10]}],
        },
        "bands": {},
    }
    cfg = load_config(_write(tmp_path / "custom.json", payload))
    assert cfg.data_schema.names == ["score"]
    assert cfg.data_schema.label == "band"


def test_fingerprint_tracks_content(tmp_path):
    a = load_config(_write(tmp_path / "a.json", {"seed": 1}))
    b = load_config(_write(tmp_path / "b.json", {"seed": 1}))
    c = load_config(_write(tmp_path / "c.json", {"seed": 2}))
    assert config_fingerprint(a) == config_fingerprint(b) != config_fingerprint(c)
    assert len(config_fingerprint(a)) == 12
