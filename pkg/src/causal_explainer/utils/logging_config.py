"""
Logging Configuration

Console and file logging for the explainer CLI and library, plus the
one-line metric format shared by training and parameter selection.
"""

import logging
from pathlib import Path
from typing import List, Mapping, Optional, Union

from rich.console import Console
from rich.logging import RichHandler

# Loggers that report optimization progress every few steps or epochs
STEP_LOGGERS = ("causal_explainer.explainer.training", "causal_explainer.models.classifiers")


def setup_logging(level: str = "INFO", log_file: Optional[str] = None,
                  quiet_steps: bool = False) -> None:
    """
    Configure logging for the application.

    Console records go to stderr; stdout is reserved for the summary table.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional file path for log output, parent directories are created
        quiet_steps: Raise the per-step training loggers to WARNING
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    console_handler = RichHandler(
        console=Console(stderr=True),
        rich_tracebacks=True,
        tracebacks_show_locals=False,
        markup=False,
        show_path=numeric_level <= logging.DEBUG,
    )
    console_handler.setLevel(numeric_level)
    handlers: List[logging.Handler] = [console_handler]

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        handlers.append(file_handler)

    # force=True so repeated CLI invocations in one process replace the handlers
    logging.basicConfig(
        level=numeric_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=handlers,
        force=True
    )

    for name in STEP_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING if quiet_steps else logging.NOTSET)


def format_metrics(metrics: Mapping[str, Union[float, int, str]], precision: int = 4) -> str:
    """
    Render metrics as ``name=value`` pairs for a single log line.

    Floats use fixed precision, everything else ``str``.

    Example:
        >>> format_metrics({"C": 0.69314, "D": -1.0, "K": 1})
        'C=0.6931 D=-1.0000 K=1'
    """
    parts = []
    for name, value in metrics.items():
        if isinstance(value, float):
            parts.append(f"{name}={value:.{precision}f}")
        else:
            parts.append(f"{name}={value}")
    return " ".join(parts)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a module.

    Args:
        name: Logger name (typically __name__)

    Returns:
        Logger instance
    """
    return logging.getLogger(name)
