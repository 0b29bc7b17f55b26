"""Tests for checkpoints and run artifacts."""

import csv
import json

import numpy as np
import pytest

from causal_explainer.analyzers.evaluation import latent_sweep
from causal_explainer.core.probability import SeededRng
from causal_explainer.models.classifiers import (
    AndClassifier,
    ConstantClassifier,
    LinearSigmoidClassifier,
    MlpClassifier,
)
from causal_explainer.models.generative import LinearGaussianMap, VaeModel
from causal_explainer.storage.checkpoint import (
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from causal_explainer.storage.export import (
    read_summary,
    tile_sweep,
    to_gray_bytes,
    write_csv,
    write_pgm,
    write_summary,
)
from causal_explainer.utils.errors import CheckpointError, ShapeError


def _models():
    g = LinearGaussianMap.random(3, 1, 1, SeededRng(0), gamma=0.1)
    g.set_data_covariance(np.diag([1.0, 2.0, 0.5]))
    return [
        g,
        VaeModel(5, K=1, L=2, hidden=(4, 3), rng=SeededRng(1), decode_mode="sample"),
        MlpClassifier(3, 3, (5,), SeededRng(2), class_labels=(1, 4, 7)),
        LinearSigmoidClassifier([0.2, -1.0, 0.5], "logistic", steepness=4.0),
        AndClassifier([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], steepness=50.0),
        ConstantClassifier([0.1, 0.9], input_dim=3),
    ]


@pytest.mark.parametrize("model", _models(), ids=lambda m: m.kind)
def test_round_trip_is_bit_exact(tmp_path, model):
    path = save_checkpoint(model, tmp_path / "model.ckpt")
    restored = load_checkpoint(path, expected_kind=model.kind)
    arrays, meta = model.state()
    restored_arrays, restored_meta = restored.state()
    assert type(restored) is type(model)
    assert restored_meta == json.loads(json.dumps(meta))
    assert set(restored_arrays) == set(arrays)
    for name, values in arrays.items():
        np.testing.assert_array_equal(restored_arrays[name], values)


def test_restored_maps_are_frozen(tmp_path):
    path = save_checkpoint(_models()[0], tmp_path / "map.ckpt")
    assert not any(p.requires_grad for p in load_checkpoint(path).parameters())


def test_kind_and_presence_checks(tmp_path):
    path = save_checkpoint(LinearSigmoidClassifier([1.0, 0.0]), tmp_path / "f.ckpt")
    with pytest.raises(CheckpointError):
        load_checkpoint(path, expected_kind=("lingauss", "vae"))
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")
    unknown = tmp_path / "unknown.ckpt"
    unknown.write_bytes(encode_checkpoint("mystery", {}, {}))
    with pytest.raises(CheckpointError):
        load_checkpoint(unknown)
    incomplete = tmp_path / "incomplete.ckpt"
    incomplete.write_bytes(encode_checkpoint("lingauss", {}, {"K": 1}))
    with pytest.raises(CheckpointError):
        load_checkpoint(incomplete)


def _valid_bytes():
    return encode_checkpoint("lingauss", {"W": np.eye(2), "b": np.ones(3)}, {"K": 1})


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda raw: b"X" + raw[1:],
        lambda raw: raw[:len(MAGIC) + 5],
        lambda raw: raw[:len(MAGIC)] + b"{not json\n" + raw[raw.index(b"\n", len(MAGIC)) + 1:],
        lambda raw: raw.replace(b'"version": 1', b'"version": 9'),
        lambda raw: raw[:-8],
        lambda raw: raw + b"\x00" * 8,
        lambda raw: raw[:-3],
    ],
    ids=["magic", "header-cut", "header-json", "version", "payload-short", "payload-long",
         "payload-ragged"],
)
def test_corrupt_checkpoints_rejected(corrupt):
    raw = _valid_bytes()
    kind, arrays, _ = decode_checkpoint(raw)
    assert kind == "lingauss"
    np.testing.assert_array_equal(arrays["W"], np.eye(2))
    with pytest.raises(CheckpointError):
        decode_checkpoint(corrupt(raw))


def test_csv_keeps_full_float_precision(tmp_path):
    path = write_csv(tmp_path / "out" / "t.csv", ["a", "b", "c"], [[1, 0.1 + 0.2, None]])
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["a", "b", "c"]
    assert float(rows[1][1]) == 0.1 + 0.2
    assert rows[1][2] == ""


def test_pgm_layout(tmp_path):
    image = np.array([[0.0, 0.5, 1.0], [1.2, -0.1, 0.25]])
    raw = write_pgm(tmp_path / "img.pgm", image).read_bytes()
    assert raw.startswith(b"P5\n3 2\n255\n")
    assert list(raw[-6:]) == [0, 128, 255, 255, 0, 64]
    np.testing.assert_array_equal(to_gray_bytes(image), np.frombuffer(raw[-6:], dtype=np.uint8).reshape(2, 3))
    with pytest.raises(ShapeError):
        write_pgm(tmp_path / "bad.pgm", np.zeros(4))


def test_tile_sweep_mosaic():
    g = LinearGaussianMap(np.eye(4)[:, :2] * 0.5, K=1)
    f = ConstantClassifier([0.5, 0.5], input_dim=4)
    sweep = latent_sweep(g, f, np.zeros((2, 2)), factor=0, span=1.0, steps=3)
    mosaic = tile_sweep(sweep, 2, 2, pad=1)
    assert mosaic.shape == (2 * 2 + 1, 3 * 2 + 2)
    np.testing.assert_allclose(mosaic[:2, 6:8], sweep.outputs[0, 2].reshape(2, 2))
    with pytest.raises(ShapeError):
        tile_sweep(sweep, 3, 3)


def test_summary_round_trip(tmp_path):
    write_summary(tmp_path, "certificate",
                  {"bound": np.float64(0.05), "bad": float("nan"), "flows": np.array([1.0, 2.0])},
                  ["summary.json"])
    summary = read_summary(tmp_path)
    assert summary["command"] == "certificate"
    assert summary["metrics"] == {"bound": 0.05, "bad": None, "flows": [1.0, 2.0]}
    assert summary["artifacts"] == ["summary.json"]
