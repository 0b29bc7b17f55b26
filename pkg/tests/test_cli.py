"""End-to-end tests for the causal-explainer command line."""

import csv

import numpy as np
import pytest
import yaml

from causal_explainer.explainer.config import CONFIG_ENV_VAR
from causal_explainer.main import cli_main
from causal_explainer.storage.export import read_summary

QUICK = {
    "dataset": "isotropic-gaussian",
    "data_dim": 2,
    "n_samples": 600,
    "classifier": "linear",
    "classifier_a": [1.0, 0.0],
    "K": 1,
    "L": 1,
    "lambda": 0.05,
    "n_alpha": 16,
    "n_beta": 4,
    "steps": 30,
    "learning_rate": 0.02,
    "log_every": 10,
}


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)


def _config(tmp_path, name="run.yaml", **values):
    document = {**QUICK, **values}
    path = tmp_path / name
    path.write_text(yaml.safe_dump(document))
    return str(path)


def _run(config, out, *extra):
    return cli_main([*extra[:1], "--config", config, "--output-dir", str(out), *extra[1:]])


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_certificate_prints_bound(tmp_path, capsys):
    out = tmp_path / "cert"
    code = cli_main(["certificate", "--mi-nats", "1.03", "--classes", "3", "--output-dir", str(out)])
    assert code == 0
    metrics = read_summary(out)["metrics"]
    assert metrics["error_bound"] == pytest.approx(0.05, abs=0.005)
    assert "0.049" in capsys.readouterr().out
    assert (out / "report.md").exists()
    assert (out / "resolved-config.yaml").exists()


def test_certificate_argument_errors(tmp_path):
    out = str(tmp_path / "cert")
    assert cli_main(["certificate", "--mi-nats", "5.0", "--classes", "2", "--output-dir", out]) == 3
    assert cli_main(["certificate", "--mi-nats", "0.5", "--output-dir", out]) == 2
    assert cli_main(["no-such-command"]) == 2


def test_unknown_config_key(tmp_path):
    config = _config(tmp_path, learnig_rate=0.1)
    assert _run(config, tmp_path / "out", "train-explainer") == 2


def test_train_then_explain(tmp_path):
    config = _config(tmp_path)
    trained = tmp_path / "trained"
    assert _run(config, trained, "train-explainer") == 0
    summary = read_summary(trained)
    assert summary["command"] == "train-explainer"
    assert {"explainer.ckpt", "trace.csv", "resolved-config.yaml"} <= set(summary["artifacts"])
    assert summary["metrics"]["backend"] == "lingauss"
    assert 0.0 <= summary["metrics"]["angle_alpha_a_deg"] <= 90.0
    assert [int(r["step"]) for r in _rows(trained / "trace.csv")][0] == 0

    explain = _config(tmp_path, "explain.yaml", explainer_checkpoint=str(trained / "explainer.ckpt"),
                      sweep_anchors=2)
    swept = tmp_path / "swept"
    assert _run(explain, swept, "sweep", "--sweep-steps", "1") == 0
    rows = _rows(swept / "sweep.csv")
    assert len(rows) == 2
    for row in rows:
        assert float(row["offset"]) == 0.0
        assert float(row["p0"]) + float(row["p1"]) == pytest.approx(1.0)
    assert _run(explain, tmp_path / "even", "sweep", "--sweep-steps", "4") == 2

    influenced = tmp_path / "influence"
    assert _run(explain, influenced, "influence") == 0
    metrics = read_summary(influenced)["metrics"]
    assert metrics["C"] >= -1e-9
    assert len(metrics["factor_flows"]) == 2
    assert 0.0 <= metrics["map_error"] <= 0.5
    assert 0.0 <= metrics["error_bound"] <= 0.5
    assert (influenced / "influence.csv").exists()


def test_missing_or_unreadable_explainer(tmp_path):
    assert _run(_config(tmp_path), tmp_path / "a", "influence") == 2
    absent = _config(tmp_path, "absent.yaml", explainer_checkpoint=str(tmp_path / "none.ckpt"))
    assert _run(absent, tmp_path / "b", "influence") == 5
    garbage = tmp_path / "garbage.ckpt"
    garbage.write_bytes(b"not a checkpoint")
    broken = _config(tmp_path, "broken.yaml", explainer_checkpoint=str(garbage))
    assert _run(broken, tmp_path / "c", "sweep") == 5


def test_identical_runs_give_identical_outputs(tmp_path):
    config = _config(tmp_path)
    assert _run(config, tmp_path / "first", "train-explainer", "--seed", "3") == 0
    assert _run(config, tmp_path / "second", "train-explainer", "--seed", "3") == 0
    for name in ("explainer.ckpt", "summary.json"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_command_line_overrides_config(tmp_path):
    out = tmp_path / "out"
    assert _run(_config(tmp_path), out, "train-explainer", "--K", "2", "--L", "0", "--lambda", "0.1") == 0
    resolved = yaml.safe_load((out / "resolved-config.yaml").read_text())
    assert (resolved["K"], resolved["L"], resolved["lambda"]) == (2, 0, 0.1)
    metrics = read_summary(out)["metrics"]
    assert (metrics["K"], metrics["L"]) == (2, 0)


@pytest.mark.slow
def test_linear_gaussian_explainer_aligns_with_classifier(tmp_path):
    config = _config(tmp_path, n_samples=6000, n_alpha=64, n_beta=16, steps=800,
                     learning_rate=0.01, log_every=100)
    out = tmp_path / "aligned"
    assert _run(config, out, "train-explainer") == 0
    metrics = read_summary(out)["metrics"]
    assert metrics["angle_alpha_a_deg"] < 5.0
    assert metrics["max_angle_beta_a_deg"] > 80.0
    assert metrics["final_c"] == pytest.approx(metrics["quadrature_c"], abs=0.05)


def test_train_classifier(tmp_path):
    config = _config(tmp_path, dataset="two-gaussian-labeled", n_samples=1200, classifier="mlp",
                     classifier_hidden=[8], classifier_epochs=3, classifier_batch_size=32)
    out = tmp_path / "classifier"
    assert _run(config, out, "train-classifier") == 0
    metrics = read_summary(out)["metrics"]
    assert metrics["classes"] == [0, 1]
    assert metrics["validation_accuracy"] > 0.95
    assert (out / "classifier.ckpt").exists()

    # an mlp classifier is only available through its checkpoint
    assert _run(config, tmp_path / "explainer", "train-explainer") == 2
    chained = _config(tmp_path, "chained.yaml", dataset="two-gaussian-labeled", n_samples=1200,
                      classifier="mlp", classifier_checkpoint=str(out / "classifier.ckpt"), steps=5)
    assert _run(chained, tmp_path / "chained", "train-explainer") == 0


def test_classifier_dimension_mismatch(tmp_path):
    config = _config(tmp_path, data_dim=3)
    assert _run(config, tmp_path / "out", "train-explainer") == 3


def test_landscape(tmp_path):
    config = _config(tmp_path, n_alpha=100, n_beta=20, landscape_lambdas=[1.0])
    out = tmp_path / "landscape"
    assert _run(config, out, "landscape", "--grid-res", "45") == 0
    metrics = read_summary(out)["metrics"]
    assert metrics["cells"] == 16
    assert len(metrics["C_lambda0_argmax"]) == 2
    assert "C_lambda1_separation_deg" in metrics
    assert len(_rows(out / "landscape.csv")) == 16
    assert _run(config, tmp_path / "bad", "landscape", "--grid-res", "120") == 2


def test_intervene_needs_an_encoder(tmp_path):
    trained = tmp_path / "trained"
    config = _config(tmp_path, dataset="two-gaussian-labeled", steps=5)
    assert _run(config, trained, "train-explainer") == 0
    explain = _config(tmp_path, "explain.yaml", dataset="two-gaussian-labeled",
                      explainer_checkpoint=str(trained / "explainer.ckpt"))
    assert _run(explain, tmp_path / "intervene", "intervene") == 3


def test_vae_on_idx_images(tmp_path, idx_writer):
    rng = np.random.default_rng(0)
    images = (rng.random((12, 4, 4)) * 255).astype(np.uint8)
    image_path, label_path = idx_writer(images, [0, 1] * 6)
    idx = {
        "dataset": "idx",
        "idx_images": image_path,
        "idx_labels": label_path,
        "backend": "vae",
        "classifier": "constant",
        "constant_probs": [0.5, 0.5],
        "vae_hidden": [8],
        "batch_size": 4,
        "steps": 5,
        "sweep_anchors": 2,
        "sweep_steps": 3,
    }
    trained = tmp_path / "trained"
    assert _run(_config(tmp_path, **idx), trained, "train-explainer") == 0
    assert read_summary(trained)["metrics"]["backend"] == "vae"

    explain = _config(tmp_path, "explain.yaml", explainer_checkpoint=str(trained / "explainer.ckpt"),
                      **idx)
    intervened = tmp_path / "intervene"
    assert _run(explain, intervened, "intervene") == 0
    metrics = read_summary(intervened)["metrics"]
    assert {"drop_factor0", "drop_factor1"} <= set(metrics)
    assert len(_rows(intervened / "intervention.csv")) == 2

    swept = tmp_path / "sweep"
    assert _run(explain, swept, "sweep") == 0
    raw = (swept / "sweep-factor0.pgm").read_bytes()
    # 2 anchors by 3 values of 4x4 images with 1-pixel gaps
    assert raw.startswith(b"P5\n14 9\n255\n")
    assert "sweep-factor0.pgm" in read_summary(swept)["artifacts"]
