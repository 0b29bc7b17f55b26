"""Tests for the IDX reader and the synthetic generators."""

import numpy as np
import pytest

from conftest import idx_image_bytes, idx_label_bytes

from causal_explainer.core.probability import SeededRng, sample_covariance
from causal_explainer.datasets.idx import load_idx, read_idx_images, read_idx_labels
from causal_explainer.datasets.synthetic import synth_dataset
from causal_explainer.utils.errors import (
    DatasetError,
    IdxCountMismatchError,
    IdxMagicError,
    IdxTrailingBytesError,
    IdxTruncatedError,
)


def _images(n, rows=2, cols=3):
    return (np.arange(n * rows * cols) % 256).astype(np.uint8).reshape(n, rows, cols)


def test_class_filter_and_split(idx_writer):
    images = np.zeros((4, 2, 2), dtype=np.uint8)
    images[0, 0, 0] = 255
    image_path, label_path = idx_writer(images, [3, 1, 8, 7])
    data = load_idx(image_path, label_path, class_filter=[3, 8])
    # 4 items: the first 3 train, the last one (label 7) validates and is filtered out
    assert data.train.num_samples == 2
    assert data.validation is None
    assert data.classes == (3, 8)
    assert list(data.train.labels) == [3, 8]
    assert data.train.x.shape == (2, 4)
    assert data.train.x[0, 0] == 1.0
    assert data.train.x.max() <= 1.0


def test_full_size_split(idx_writer):
    n = 0xEA60
    image_path, label_path = idx_writer(np.zeros((n, 1, 1), dtype=np.uint8), np.arange(n) % 10)
    assert read_idx_labels(label_path).size == 60000
    data = load_idx(image_path, label_path)
    assert data.train.num_samples == 50000
    assert data.validation.num_samples == 10000
    assert data.num_samples == 60000
    assert data.classes == tuple(range(10))


def test_gzip_matches_raw(idx_writer):
    images = _images(6)
    raw = load_idx(*idx_writer(images, [0, 1, 0, 1, 0, 1], name="raw"))
    packed = load_idx(*idx_writer(images, [0, 1, 0, 1, 0, 1], name="packed", compress=True))
    np.testing.assert_array_equal(raw.train.x, packed.train.x)
    np.testing.assert_array_equal(read_idx_images(idx_writer(images, [0] * 6, name="img")[0]), images)


def test_wrong_magic(tmp_path):
    path = tmp_path / "images"
    path.write_bytes(idx_image_bytes(_images(2), magic=0x00000801))
    with pytest.raises(IdxMagicError):
        read_idx_images(str(path))
    labels = tmp_path / "labels"
    labels.write_bytes(idx_label_bytes([1, 2], magic=0x00000803))
    with pytest.raises(IdxMagicError):
        read_idx_labels(str(labels))


def test_short_payload_is_truncated(tmp_path):
    path = tmp_path / "images"
    path.write_bytes(idx_image_bytes(_images(3))[:-1])
    with pytest.raises(IdxTruncatedError, match="only"):
        read_idx_images(str(path))


def test_long_payload_reports_trailing_bytes(tmp_path):
    images = tmp_path / "images"
    images.write_bytes(idx_image_bytes(_images(3)) + b"\x00\x00")
    with pytest.raises(IdxTrailingBytesError, match="2 trailing bytes"):
        read_idx_images(str(images))
    labels = tmp_path / "labels"
    labels.write_bytes(idx_label_bytes([0, 1]) + b"\x07")
    with pytest.raises(IdxTrailingBytesError, match="1 trailing bytes"):
        read_idx_labels(str(labels))
    assert not issubclass(IdxTrailingBytesError, IdxTruncatedError)


def test_short_and_corrupt_files(tmp_path):
    short = tmp_path / "short"
    short.write_bytes(b"\x00\x00\x08")
    with pytest.raises(IdxTruncatedError):
        read_idx_images(str(short))
    with pytest.raises(IdxTruncatedError):
        read_idx_labels(str(short))
    bad_gzip = tmp_path / "bad.gz"
    bad_gzip.write_bytes(b"\x1f\x8b\x08\x00garbage")
    with pytest.raises(IdxTruncatedError):
        read_idx_labels(str(bad_gzip))
    with pytest.raises(DatasetError):
        read_idx_images(str(tmp_path / "missing"))


def test_count_mismatch(idx_writer, tmp_path):
    image_path, _ = idx_writer(_images(3), [0, 1, 2])
    labels = tmp_path / "labels"
    labels.write_bytes(idx_label_bytes([0, 1]))
    with pytest.raises(IdxCountMismatchError):
        load_idx(image_path, str(labels))


def test_filter_leaving_no_training_samples(idx_writer):
    with pytest.raises(DatasetError):
        load_idx(*idx_writer(_images(6), [0] * 6), class_filter=[5])


@pytest.mark.parametrize("offset", range(16))
@pytest.mark.parametrize("mask", [0x01, 0x80])
def test_mutated_image_header_rejected(tmp_path, offset, mask):
    raw = bytearray(idx_image_bytes(_images(2)))
    raw[offset] ^= mask
    path = tmp_path / "images"
    path.write_bytes(bytes(raw))
    with pytest.raises(DatasetError):
        read_idx_images(str(path))


def test_isotropic_covariance():
    data = synth_dataset("isotropic-gaussian", {"data_dim": 3, "n_samples": 20000}, SeededRng(1))
    assert data.labels is None
    assert np.linalg.norm(sample_covariance(data.x) - np.eye(3)) < 0.05


def test_two_gaussians_are_balanced_and_offset():
    data = synth_dataset("two-gaussian-labeled", {"data_dim": 2, "n_samples": 4000}, SeededRng(2))
    assert np.sum(data.labels == 1) == 2000
    assert data.x[data.labels == 1, 0].mean() == pytest.approx(3.0, abs=0.1)
    assert data.x[data.labels == 0, 0].mean() == pytest.approx(-3.0, abs=0.1)
    assert abs(data.x[:, 1].mean()) < 0.1


def test_low_rank_spectrum():
    data = synth_dataset("low-rank-gaussian", {"data_dim": 5, "n_samples": 5000, "rank": 2},
                         SeededRng(3))
    eigvals = np.sort(np.linalg.eigvalsh(sample_covariance(data.x)))
    assert np.all(eigvals[:3] < 1e-10)
    np.testing.assert_allclose(eigvals[3:], 1.0, atol=0.1)
    with pytest.raises(DatasetError):
        synth_dataset("low-rank-gaussian", {"data_dim": 2, "rank": 3})


def test_three_class_labels_follow_quadrants():
    data = synth_dataset("three-class-gaussian", {"data_dim": 2, "n_samples": 3000}, SeededRng(4))
    x, labels = data.x, data.labels
    assert set(np.unique(labels)) == {0, 1, 2}
    assert np.all(labels[x[:, 0] < 0] == 0)
    assert np.all(labels[(x[:, 0] >= 0) & (x[:, 1] < 0)] == 1)
    with pytest.raises(DatasetError):
        synth_dataset("three-class-gaussian", {"data_dim": 1})


def test_synthetic_reproducibility_and_errors():
    a = synth_dataset("isotropic-gaussian", {"n_samples": 10}, SeededRng(5))
    b = synth_dataset("isotropic-gaussian", {"n_samples": 10}, SeededRng(5))
    c = synth_dataset("isotropic-gaussian", {"n_samples": 10}, SeededRng(6))
    np.testing.assert_array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)
    with pytest.raises(DatasetError):
        synth_dataset("spiral")
    with pytest.raises(DatasetError):
        synth_dataset("isotropic-gaussian", {"n_samples": 0})


def _mnist_pair(directory):
    for suffix in ("", ".gz"):
        images = directory / f"train-images-idx3-ubyte{suffix}"
        labels = directory / f"train-labels-idx1-ubyte{suffix}"
        if images.exists() and labels.exists():
            return str(images), str(labels)
    pytest.skip(f"no MNIST training files in {directory}")


@pytest.mark.mnist
def test_mnist_three_eight_subset(mnist_dir):
    data = load_idx(*_mnist_pair(mnist_dir), class_filter=[3, 8])
    assert (data.rows, data.cols) == (28, 28)
    assert data.classes == (3, 8)
    assert set(np.unique(data.train.labels)) == {3, 8}
    assert data.train.num_samples + data.validation.num_samples == 6131 + 5851
    assert data.train.x.shape[1] == 784
