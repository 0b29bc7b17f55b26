"""
Result Export

Writes run artifacts: CSV tables with a header row, 8-bit grayscale PGM
(P5) images, and the JSON summary of final metrics.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from ..analyzers.evaluation import InterventionResult, SweepGrid
from ..analyzers.landscape import AngleLandscape
from ..explainer.selection import SelectionTrace
from ..explainer.training import TrainTrace
from ..utils.errors import ShapeError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
SUMMARY_NAME = "summary.json"


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows under a header row, comma-delimited."""
    path = _prepare(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if value is None:
        return ""
    return value


def to_gray_bytes(image: np.ndarray) -> np.ndarray:
    """Scale values in [0, 1] to uint8, clipping anything outside."""
    return np.round(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path: PathLike, image: np.ndarray) -> Path:
    """
    Write a 2-D array with values in [0, 1] as a binary PGM.

    Raises:
        ShapeError: If the image is not 2-D
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ShapeError(f"a PGM image must be 2-D, got extents {image.shape}")
    rows, cols = image.shape
    path = _prepare(path)
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    path.write_bytes(header + to_gray_bytes(image).tobytes())
    return path


def tile_sweep(grid: SweepGrid, rows: int, cols: int, pad: int = 1) -> np.ndarray:
    """
    Arrange a sweep's decoded images as a mosaic.

    One anchor per mosaic row, one sweep value per mosaic column, separated
    by ``pad`` pixels of zeros.
    """
    n_anchor, steps, dim = grid.outputs.shape
    if dim != rows * cols:
        raise ShapeError(f"sweep outputs have {dim} values, cannot form {rows}x{cols} images")
    height = n_anchor * rows + (n_anchor - 1) * pad
    width = steps * cols + (steps - 1) * pad
    mosaic = np.zeros((height, width))
    for a in range(n_anchor):
        for s in range(steps):
            top, left = a * (rows + pad), s * (cols + pad)
            mosaic[top:top + rows, left:left + cols] = grid.outputs[a, s].reshape(rows, cols)
    return mosaic


def write_sweep_csv(path: PathLike, grid: SweepGrid) -> Path:
    """One row per (anchor, sweep value) with the decoded output and class probabilities."""
    n_anchor, steps, dim = grid.outputs.shape
    header = ["anchor", "offset"] + [f"x{i}" for i in range(dim)] + [
        f"p{m}" for m in range(grid.probs.shape[2])
    ]
    rows = (
        [a, grid.values[s], *grid.outputs[a, s], *grid.probs[a, s]]
        for a in range(n_anchor)
        for s in range(steps)
    )
    return write_csv(path, header, rows)


def write_trace_csv(path: PathLike, trace: TrainTrace) -> Path:
    return write_csv(path, ["step", "c", "d", "total", "seconds"], trace.rows())


def write_selection_csv(path: PathLike, selection: SelectionTrace) -> Path:
    """Latent-budget curve rows followed by one row per (K, L) split."""
    header = ["stage", "K", "L", "lambda", "c", "d", "fidelity_met", "lambda_attempts",
              "c_gain", "plateau"]
    rows: List[List[Any]] = [
        ["budget", 0, L, 1.0, None, d, None, None, None, None]
        for L, d in sorted(selection.budget_curve.items())
    ]
    rows.extend(
        ["split", r.K, r.L, r.lam, r.c, r.d, r.fidelity_met, r.lambda_attempts, r.c_gain, r.plateau]
        for r in selection.rows
    )
    return write_csv(path, header, rows)


def write_landscape_csv(path: PathLike, landscape: AngleLandscape) -> Path:
    """One row per grid cell with every variant value, D and (when present) H(Y)."""
    variants = sorted(landscape.values)
    header = ["theta1", "theta2", *variants, "fidelity"]
    if landscape.entropy_y is not None:
        header.append("entropy_y")
    rows = []
    for i, t1 in enumerate(landscape.angles):
        for j, t2 in enumerate(landscape.angles):
            row = [t1, t2, *(landscape.values[v][i, j] for v in variants), landscape.fidelity[i, j]]
            if landscape.entropy_y is not None:
                row.append(landscape.entropy_y[i, j])
            rows.append(row)
    return write_csv(path, header, rows)


def write_intervention_csv(path: PathLike, results: Sequence[InterventionResult]) -> Path:
    header = ["factor", "original_acc", "reencoded_acc", "intervened_acc", "drop"]
    rows = ([r.factor, r.original_acc, r.reencoded_acc, r.intervened_acc, r.drop] for r in results)
    return write_csv(path, header, rows)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_summary(output_dir: PathLike, command: str, metrics: Dict[str, Any],
                  artifacts: Optional[List[str]] = None) -> Path:
    """Write ``summary.json`` with the subcommand, its final metrics and written artifacts."""
    path = _prepare(Path(output_dir) / SUMMARY_NAME)
    document = {"command": command, "metrics": _jsonable(metrics), "artifacts": artifacts or []}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_summary(output_dir: PathLike) -> Dict[str, Any]:
    return json.loads((Path(output_dir) / SUMMARY_NAME).read_text(encoding="utf-8"))
