"""Tests for run configuration loading."""

from pathlib import Path

import pytest
import yaml

from causal_explainer.explainer.config import (
    CONFIG_ENV_VAR,
    TrainConfig,
    load_run_config,
    write_resolved_config,
)
from causal_explainer.utils.errors import ConfigError


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    # register the variable so a value loaded from .env is removed on teardown
    monkeypatch.setenv(CONFIG_ENV_VAR, "")
    monkeypatch.delenv(CONFIG_ENV_VAR)


def _write(tmp_path, document, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(document))
    return str(path)


def test_defaults_without_file():
    cfg = load_run_config()
    assert cfg.backend == "lingauss"
    assert cfg.lam == 0.05
    assert cfg.train_config().K == 1


def test_lambda_alias_and_field_name(tmp_path):
    assert load_run_config(_write(tmp_path, {"lambda": 0.3})).lam == 0.3
    assert load_run_config(_write(tmp_path, {"lam": 0.7}, "b.yaml")).lam == 0.7


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="learnig_rate"):
        load_run_config(_write(tmp_path, {"learnig_rate": 0.1}))


def test_nested_mapping_rejected(tmp_path):
    with pytest.raises(ConfigError, match="training"):
        load_run_config(_write(tmp_path, {"training": {"steps": 10}}))


def test_idx_dataset_needs_paths(tmp_path):
    with pytest.raises(ConfigError, match="idx_labels"):
        load_run_config(_write(tmp_path, {"dataset": "idx", "idx_images": "x.idx"}))


def test_bad_values_and_files(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, {"backend": "flow"}))
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, {"influence_variants": ["mystery"]}))
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "absent.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("K: [1, 2\n")
    with pytest.raises(ConfigError):
        load_run_config(str(broken))
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_run_config(str(listing))


def test_training_settings_validated(tmp_path):
    cfg = load_run_config(_write(tmp_path, {"variant": "sideways"}))
    with pytest.raises(ConfigError):
        cfg.train_config()
    with pytest.raises(ConfigError):
        TrainConfig(K=0, L=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(gamma=1.5).validate()


def test_env_var_supplies_path(tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, _write(tmp_path, {"K": 4, "L": 2}))
    cfg = load_run_config()
    assert (cfg.K, cfg.L) == (4, 2)


def test_dotenv_file_supplies_path(tmp_path):
    config_path = _write(tmp_path, {"seed": 42})
    (tmp_path / ".env").write_text(f"{CONFIG_ENV_VAR}={config_path}\n")
    assert load_run_config().seed == 42


def test_overrides_win_and_none_is_ignored(tmp_path):
    path = _write(tmp_path, {"K": 2, "steps": 50})
    cfg = load_run_config(path, {"K": 3, "lambda": 0.5, "steps": None})
    assert cfg.K == 3
    assert cfg.lam == 0.5
    assert cfg.steps == 50


def test_resolved_config_reloads_identically(tmp_path):
    cfg = load_run_config(_write(tmp_path, {"lambda": 0.2, "class_filter": [3, 8]}))
    path = write_resolved_config(cfg, str(tmp_path / "out"))
    assert path.read_text().startswith("# resolved run configuration")
    again = load_run_config(str(path))
    assert again.to_document() == cfg.to_document()
    assert "lambda" in again.to_document()


@pytest.mark.parametrize(
    "name", ["lingauss-2d.yaml", "and-landscape.yaml", "mnist-3-8.yaml", "three-class.yaml"]
)
def test_shipped_configs_are_valid(name):
    path = Path(__file__).resolve().parents[1] / "config" / name
    cfg = load_run_config(str(path))
    cfg.train_config()
