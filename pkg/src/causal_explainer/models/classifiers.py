"""
Black-Box Classifiers

The classifier interface the explainer depends on (class probabilities and
their input gradients) and the concrete classifiers it is studied with:
a linear boundary under a normal-CDF or logistic sigmoid, the product of two
such boundaries, a constant output, and a trained MLP.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..core.layers import Mlp
from ..core.optim import SgdMomentum
from ..core.probability import CategoricalDist, SeededRng
from ..core.tensor import (
    Tape,
    Tensor,
    as_tensor,
    custom_op,
    log_softmax,
    mul,
    normal_cdf_values,
    normal_pdf_values,
    reduce_mean,
    reduce_sum,
)
from ..datasets.base import LabeledData
from ..utils.errors import DatasetError, DimensionError, ModelError

logger = logging.getLogger(__name__)


@dataclass
class ClassifierTrainConfig:
    """Settings for training the MLP classifier with SGD and momentum."""

    hidden: Tuple[int, ...] = (64, 64)
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 0.1
    momentum: float = 0.5
    seed: int = 0


class ClassifierHandle(ABC):
    """
    A classifier seen only through its probabilities and input gradients.

    Explanation code calls predict_proba / predict_grad and nothing else.
    Subclasses provide batched probabilities (B, M) and Jacobians (B, M, N).
    """

    kind: str = "classifier"

    def __init__(self, input_dim: int, num_classes: int,
                 class_labels: Optional[Sequence[int]] = None):
        self.input_dim = int(input_dim)
        self.num_classes = int(num_classes)
        labels = range(self.num_classes) if class_labels is None else class_labels
        self.class_labels: Tuple[int, ...] = tuple(int(c) for c in labels)
        if len(self.class_labels) != self.num_classes:
            raise ModelError(
                f"{len(self.class_labels)} class labels given for {self.num_classes} classes"
            )

    @abstractmethod
    def _probabilities(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities for row inputs, shape (B, M)."""

    @abstractmethod
    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        """d p_m / d x for row inputs, shape (B, M, N)."""

    def _as_rows(self, x: Any) -> Tuple[Tensor, bool]:
        x = as_tensor(x)
        single = x.ndim == 1
        if single:
            x = x.reshape(1, x.shape[0])
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionError(
                f"{self.kind} expects inputs of dimension {self.input_dim}, got extents {x.shape}"
            )
        return x, single

    def predict_proba(self, x: Any) -> Tensor:
        """
        Class probabilities for a batch of inputs.

        The result is differentiable with respect to ``x``; the backward pass
        goes through predict_grad's Jacobian, never the model's internals.

        Args:
            x: Input rows (B, N) or a single input (N,)

        Returns:
            Tensor of simplex points, (B, M) or (M,) for a single input
        """
        rows, single = self._as_rows(x)
        probs = self._probabilities(rows.values)

        def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
            return (np.einsum("bm,bmn->bn", g, self._jacobian(rows.values)),)

        out = custom_op(probs, (rows,), backward_fn, f"{self.kind}.predict_proba")
        return out.reshape(self.num_classes) if single else out

    def predict_grad(self, x: Any, m: int) -> np.ndarray:
        """
        Gradient of class ``m``'s probability with respect to the input.

        Args:
            x: Input rows (B, N) or a single input (N,)
            m: Class index in [0, M)

        Returns:
            Array shaped like ``x``
        """
        if not 0 <= m < self.num_classes:
            raise DimensionError(f"class index {m} outside [0, {self.num_classes})")
        rows, single = self._as_rows(x)
        grad = self._jacobian(rows.values)[:, m, :]
        return grad[0] if single else grad

    def predict_dist(self, x: Any) -> CategoricalDist:
        """Validated class distribution for a single input."""
        rows, _ = self._as_rows(x)
        if rows.shape[0] != 1:
            raise DimensionError(f"predict_dist takes one input, got {rows.shape[0]}")
        probs = self._probabilities(rows.values)[0]
        return CategoricalDist(probs / probs.sum())

    def predict_labels(self, x: Any) -> np.ndarray:
        rows, _ = self._as_rows(x)
        index = np.argmax(self._probabilities(rows.values), axis=1)
        return np.asarray(self.class_labels)[index]

    def accuracy(self, x: Any, labels: np.ndarray) -> float:
        """Fraction of inputs whose most probable class equals the label."""
        predicted = self.predict_labels(x)
        labels = np.asarray(labels).reshape(-1)
        if labels.size != predicted.size:
            raise DimensionError(f"{predicted.size} inputs but {labels.size} labels")
        return float(np.mean(predicted == labels))

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        """Named parameter arrays and scalar metadata for checkpoints."""
        raise NotImplementedError(f"{self.kind} cannot be checkpointed")


def _check_normal(a: Any, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size == 0 or not np.all(np.isfinite(a)) or np.linalg.norm(a) == 0:
        raise ModelError(f"{name} must be a finite nonzero vector")
    return a


def _sigmoid_and_slope(s: np.ndarray, sigmoid_kind: str) -> Tuple[np.ndarray, np.ndarray]:
    if sigmoid_kind == "normal-cdf":
        return normal_cdf_values(s), normal_pdf_values(s)
    p = expit(s)
    return p, p * (1.0 - p)


SIGMOID_KINDS = ("normal-cdf", "logistic")


class LinearSigmoidClassifier(ClassifierHandle):
    """p(y=1|x) = σ(s·aᵀx) with σ the normal CDF or the logistic function."""

    kind = "linear-classifier"

    def __init__(self, a: Any, sigmoid_kind: str = "normal-cdf", steepness: float = 1.0):
        self.a = _check_normal(a, "classifier normal a")
        if sigmoid_kind not in SIGMOID_KINDS:
            raise ModelError(f"unknown sigmoid kind '{sigmoid_kind}', expected {SIGMOID_KINDS}")
        self.sigmoid_kind = sigmoid_kind
        self.steepness = float(steepness)
        super().__init__(self.a.size, 2)

    def _probabilities(self, x: np.ndarray) -> np.ndarray:
        p, _ = _sigmoid_and_slope(self.steepness * (x @ self.a), self.sigmoid_kind)
        return np.stack([1.0 - p, p], axis=1)

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        _, slope = _sigmoid_and_slope(self.steepness * (x @ self.a), self.sigmoid_kind)
        dp = (self.steepness * slope)[:, None] * self.a[None, :]
        return np.stack([-dp, dp], axis=1)

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        return {"a": self.a}, {"sigmoid_kind": self.sigmoid_kind, "steepness": self.steepness}

    @classmethod
    def from_state(cls, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> "LinearSigmoidClassifier":
        return cls(arrays["a"], meta["sigmoid_kind"], meta["steepness"])


class AndClassifier(ClassifierHandle):
    """p(y=1|x) = σ(s·a1ᵀx)·σ(s·a2ᵀx) with the logistic σ."""

    kind = "and-classifier"

    def __init__(self, a1: Any, a2: Any, steepness: float = 100.0):
        self.a1 = _check_normal(a1, "classifier normal a1")
        self.a2 = _check_normal(a2, "classifier normal a2")
        if self.a1.size != self.a2.size:
            raise ModelError(f"a1 and a2 differ in length: {self.a1.size} vs {self.a2.size}")
        self.steepness = float(steepness)
        super().__init__(self.a1.size, 2)

    def _parts(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return expit(self.steepness * (x @ self.a1)), expit(self.steepness * (x @ self.a2))

    def _probabilities(self, x: np.ndarray) -> np.ndarray:
        s1, s2 = self._parts(x)
        p = s1 * s2
        return np.stack([1.0 - p, p], axis=1)

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        s1, s2 = self._parts(x)
        d1 = self.steepness * s1 * (1.0 - s1) * s2
        d2 = self.steepness * s2 * (1.0 - s2) * s1
        dp = d1[:, None] * self.a1[None, :] + d2[:, None] * self.a2[None, :]
        return np.stack([-dp, dp], axis=1)

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        return {"a1": self.a1, "a2": self.a2}, {"steepness": self.steepness}

    @classmethod
    def from_state(cls, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> "AndClassifier":
        return cls(arrays["a1"], arrays["a2"], meta["steepness"])


class ConstantClassifier(ClassifierHandle):
    """Ignores its input and always returns the same class distribution."""

    kind = "constant-classifier"

    def __init__(self, probs: Any, input_dim: int):
        self.probs = CategoricalDist(probs).probs
        super().__init__(input_dim, self.probs.size)

    def _probabilities(self, x: np.ndarray) -> np.ndarray:
        return np.tile(self.probs, (x.shape[0], 1))

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.zeros((x.shape[0], self.num_classes, self.input_dim))

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        return {"probs": self.probs}, {"input_dim": self.input_dim}

    @classmethod
    def from_state(cls, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> "ConstantClassifier":
        return cls(arrays["probs"], int(meta["input_dim"]))


class MlpClassifier(ClassifierHandle):
    """Relu MLP with a softmax head over M classes."""

    kind = "mlp-classifier"

    def __init__(self, input_dim: int, num_classes: int, hidden: Sequence[int] = (64, 64),
                 rng: Optional[SeededRng] = None, class_labels: Optional[Sequence[int]] = None):
        super().__init__(input_dim, num_classes, class_labels)
        if self.num_classes < 2:
            raise ModelError(f"an MLP classifier needs at least 2 classes, got {num_classes}")
        self.hidden = tuple(int(h) for h in hidden)
        self.net = Mlp([self.input_dim, *self.hidden, self.num_classes], rng)
        self.train_accuracy: Optional[float] = None
        self.validation_accuracy: Optional[float] = None

    def logits(self, x: Tensor) -> Tensor:
        return self.net(x)

    def _forward(self, x: np.ndarray) -> Tuple[list, np.ndarray]:
        masks = []
        h = x
        layers = self.net.layers
        for i, layer in enumerate(layers):
            h = h @ layer.weight.values + layer.bias.values
            if i < len(layers) - 1:
                mask = h > 0
                masks.append(mask)
                h = np.where(mask, h, 0.0)
        shifted = h - h.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return masks, e / e.sum(axis=1, keepdims=True)

    def _probabilities(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x)[1]

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        masks, probs = self._forward(x)
        layers = self.net.layers
        # d(pre-activation)/dx, shape (B, width, N)
        d = np.broadcast_to(layers[0].weight.values.T, (x.shape[0],) + layers[0].weight.values.T.shape)
        for mask, layer in zip(masks, layers[1:]):
            d = np.einsum("hk,bhn->bkn", layer.weight.values, d * mask[:, :, None])
        weighted = np.einsum("bm,bmn->bn", probs, d)
        return probs[:, :, None] * (d - weighted[:, None, :])

    def parameters(self) -> list:
        return self.net.parameters()

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        arrays = {}
        for i, layer in enumerate(self.net.layers):
            arrays[f"layer{i}.weight"] = layer.weight.values
            arrays[f"layer{i}.bias"] = layer.bias.values
        meta = {
            "input_dim": self.input_dim,
            "num_classes": self.num_classes,
            "hidden": list(self.hidden),
            "class_labels": list(self.class_labels),
            "train_accuracy": self.train_accuracy,
            "validation_accuracy": self.validation_accuracy,
        }
        return arrays, meta

    @classmethod
    def from_state(cls, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> "MlpClassifier":
        model = cls(meta["input_dim"], meta["num_classes"], meta["hidden"],
                    class_labels=meta["class_labels"])
        for i, layer in enumerate(model.net.layers):
            layer.weight.values = np.array(arrays[f"layer{i}.weight"])
            layer.bias.values = np.array(arrays[f"layer{i}.bias"])
        model.net.freeze()
        model.train_accuracy = meta.get("train_accuracy")
        model.validation_accuracy = meta.get("validation_accuracy")
        return model


def train_mlp_classifier(data: LabeledData, cfg: ClassifierTrainConfig,
                         validation: Optional[LabeledData] = None,
                         classes: Optional[Sequence[int]] = None) -> MlpClassifier:
    """
    Train an MLP classifier by minimizing cross-entropy with SGD and momentum.

    Args:
        data: Labeled training samples
        cfg: Architecture and optimizer settings
        validation: Optional held-out samples for the recorded validation accuracy
        classes: Class labels in output order, default the labels present in ``data``

    Returns:
        Trained MlpClassifier with frozen weights and recorded accuracies

    Raises:
        DatasetError: Unlabeled data, fewer than two classes, or a class with no samples
    """
    if data.labels is None:
        raise DatasetError("classifier training needs labeled data")
    class_labels = tuple(int(c) for c in (classes if classes is not None else data.classes()))
    if len(class_labels) < 2:
        raise DatasetError(f"classifier training needs at least 2 classes, got {class_labels}")
    counts = {c: int(np.sum(data.labels == c)) for c in class_labels}
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise DatasetError(f"no training samples for class(es) {empty}")
    unknown = set(data.classes()) - set(class_labels)
    if unknown:
        raise DatasetError(f"labels {sorted(unknown)} are not among the classifier classes")

    lookup = {c: i for i, c in enumerate(class_labels)}
    targets = np.eye(len(class_labels))[[lookup[int(c)] for c in data.labels]]

    rng = SeededRng(cfg.seed).stream("classifier")
    model = MlpClassifier(data.dim, len(class_labels), cfg.hidden, rng.stream("init"), class_labels)
    optimizer = SgdMomentum(model.parameters(), lr=cfg.learning_rate, momentum=cfg.momentum)
    logger.info(
        f"Training MLP classifier {[data.dim, *cfg.hidden, len(class_labels)]} on "
        f"{data.num_samples} samples, classes {class_labels}"
    )

    order_rng = rng.stream("order")
    for epoch in range(cfg.epochs):
        order = order_rng.permutation(data.num_samples)
        total = 0.0
        for start in range(0, data.num_samples, cfg.batch_size):
            index = order[start:start + cfg.batch_size]
            xb = Tensor(data.x[index])
            yb = Tensor(targets[index])
            optimizer.zero_grad()
            with Tape() as tape:
                log_probs = log_softmax(model.logits(xb))
                loss = -reduce_mean(reduce_sum(mul(yb, log_probs), axis=1))
                tape.backward(loss)
            optimizer.step()
            total += loss.item() * index.size
        logger.debug(f"epoch {epoch + 1}/{cfg.epochs}: loss {total / data.num_samples:.4f}")

    model.net.freeze()
    model.train_accuracy = model.accuracy(data.x, data.labels)
    if validation is not None and validation.labels is not None:
        model.validation_accuracy = model.accuracy(validation.x, validation.labels)
    logger.info(
        f"Classifier trained: train accuracy {model.train_accuracy:.4f}, "
        f"validation accuracy {model.validation_accuracy}"
    )
    return model

