"""
Model Checkpoints

Saves classifiers and generative maps to a single file:

    CAUSAL-EXPLAINER-CHECKPOINT\\n
    {"version": 1, "kind": ..., "arrays": [...], "meta": {...}}\\n
    <little-endian float64 payload>

The JSON header lists every array with its shape and element offset into
the payload, so a round trip reproduces the parameters bit for bit.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..models.classifiers import (
    AndClassifier,
    ClassifierHandle,
    ConstantClassifier,
    LinearSigmoidClassifier,
    MlpClassifier,
)
from ..models.generative import GenerativeMap, LinearGaussianMap, VaeModel
from ..utils.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"CAUSAL-EXPLAINER-CHECKPOINT\n"
FORMAT_VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f8")

Model = Union[ClassifierHandle, GenerativeMap]

KINDS: Dict[str, Any] = {
    cls.kind: cls
    for cls in (
        LinearGaussianMap,
        VaeModel,
        MlpClassifier,
        LinearSigmoidClassifier,
        AndClassifier,
        ConstantClassifier,
    )
}


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot store {type(value).__name__} in a checkpoint header")


def encode_checkpoint(kind: str, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> bytes:
    """Serialize named arrays and metadata into checkpoint bytes."""
    table: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name in sorted(arrays):
        values = np.ascontiguousarray(arrays[name], dtype=PAYLOAD_DTYPE)
        table.append({"name": name, "shape": list(values.shape), "offset": offset})
        chunks.append(values.tobytes())
        offset += values.size
    header = {"version": FORMAT_VERSION, "kind": kind, "arrays": table, "meta": meta}
    line = json.dumps(header, default=_json_default, sort_keys=True).encode("utf-8")
    return MAGIC + line + b"\n" + b"".join(chunks)


def decode_checkpoint(raw: bytes, source: str = "<bytes>"
                      ) -> Tuple[str, Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Parse checkpoint bytes.

    Returns:
        (kind, arrays, meta)

    Raises:
        CheckpointError: Bad magic, unsupported version, corrupt header or
            a payload that does not match the header
    """
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{source}: not a checkpoint (bad magic)")
    end = raw.find(b"\n", len(MAGIC))
    if end < 0:
        raise CheckpointError(f"{source}: truncated header")
    try:
        header = json.loads(raw[len(MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt header ({e})") from e
    if not isinstance(header, dict):
        raise CheckpointError(f"{source}: header is not a mapping")
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{source}: unsupported checkpoint version {header.get('version')}, expected {FORMAT_VERSION}"
        )

    payload = raw[end + 1:]
    if len(payload) % PAYLOAD_DTYPE.itemsize:
        raise CheckpointError(f"{source}: payload length {len(payload)} is not a multiple of 8")
    flat = np.frombuffer(payload, dtype=PAYLOAD_DTYPE)
    arrays: Dict[str, np.ndarray] = {}
    expected = 0
    for entry in header.get("arrays", []):
        shape = tuple(int(s) for s in entry["shape"])
        start = int(entry["offset"])
        count = int(np.prod(shape, dtype=np.int64))
        if start + count > flat.size:
            raise CheckpointError(
                f"{source}: truncated payload, array '{entry['name']}' needs elements "
                f"{start}..{start + count} of {flat.size}"
            )
        arrays[entry["name"]] = flat[start:start + count].reshape(shape).astype(np.float64)
        expected = max(expected, start + count)
    if expected != flat.size:
        raise CheckpointError(f"{source}: payload holds {flat.size} values, header declares {expected}")
    return str(header.get("kind")), arrays, dict(header.get("meta", {}))


def save_checkpoint(model: Model, path: Union[str, Path]) -> Path:
    """
    Write a classifier or generative map to ``path``.

    Raises:
        CheckpointError: If the model kind cannot be stored
    """
    if model.kind not in KINDS:
        raise CheckpointError(f"no checkpoint format for model kind '{model.kind}'")
    arrays, meta = model.state()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model.kind, arrays, meta))
    logger.info(f"Saved {model.kind} checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path], expected_kind: Optional[Union[str, Tuple[str, ...]]] = None
                    ) -> Model:
    """
    Restore a model saved by save_checkpoint.

    Args:
        path: Checkpoint file
        expected_kind: Kind (or kinds) the caller can use; anything else is rejected

    Returns:
        The restored model with frozen parameters

    Raises:
        CheckpointError: Missing file, malformed content or an unexpected kind
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    kind, arrays, meta = decode_checkpoint(path.read_bytes(), str(path))
    if kind not in KINDS:
        raise CheckpointError(f"{path}: unknown model kind '{kind}'")
    if expected_kind is not None:
        allowed = (expected_kind,) if isinstance(expected_kind, str) else tuple(expected_kind)
        if kind not in allowed:
            raise CheckpointError(f"{path}: holds a {kind} model, expected {' or '.join(allowed)}")
    try:
        model = KINDS[kind].from_state(arrays, meta)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"{path}: incompatible {kind} checkpoint ({e})") from e
    if isinstance(model, GenerativeMap):
        model.freeze()
    logger.info(f"Loaded {kind} checkpoint from {path}")
    return model
