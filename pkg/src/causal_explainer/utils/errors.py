"""
Error Types

Structured errors raised across the explainer. Each carries the process exit
code the CLI uses when the error escapes a subcommand.
"""

from enum import IntEnum


class ExitCode(IntEnum):
    """Process exit codes used by the causal-explainer CLI."""

    OK = 0
    INTERNAL = 1
    CONFIG = 2
    VALIDATION = 3
    DATASET = 4
    CHECKPOINT = 5
    TRAINING = 6
    INTERRUPTED = 130


class ExplainerError(Exception):
    """Base error carrying a user-facing message and an exit code."""

    exit_code: int = int(ExitCode.VALIDATION)

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class ConfigError(ExplainerError, ValueError):
    """Invalid, unknown or missing configuration keys."""

    exit_code = int(ExitCode.CONFIG)


class ShapeError(ExplainerError, ValueError):
    """Operand extents do not conform for a tensor primitive."""


class DimensionError(ExplainerError, ValueError):
    """Input dimension does not match a classifier or generative map."""


class InvalidDistributionError(ExplainerError, ValueError):
    """A probability vector, table or covariance violates its invariants."""


class TapeError(ExplainerError, RuntimeError):
    """Backward pass requested on something the tape cannot differentiate."""


class EstimatorError(ExplainerError, ValueError):
    """An influence estimate or enumeration was requested outside its domain."""


class BackendError(ExplainerError, ValueError):
    """The generative backend does not support the requested operation."""


class DivergenceError(ExplainerError, RuntimeError):
    """Training produced a non-finite objective."""

    exit_code = int(ExitCode.TRAINING)

    def __init__(self, step: int, message: str):
        super().__init__(f"objective diverged at step {step}: {message}")
        self.step = step


class CheckpointError(ExplainerError, ValueError):
    """A checkpoint file is malformed or incompatible with the request."""

    exit_code = int(ExitCode.CHECKPOINT)


class DatasetError(ExplainerError, ValueError):
    """A dataset could not be read or built."""

    exit_code = int(ExitCode.DATASET)


class IdxMagicError(DatasetError):
    """IDX header carries the wrong magic number."""


class IdxTruncatedError(DatasetError):
    """IDX file is shorter than its header declares."""


class IdxTrailingBytesError(DatasetError):
    """IDX file carries bytes past the payload its header declares."""


class IdxCountMismatchError(DatasetError):
    """Image and label files declare different item counts."""


class DomainError(ExplainerError, ValueError):
    """A primitive was evaluated outside its mathematical domain."""


class ModelError(ExplainerError, ValueError):
    """Model parameters violate their invariants."""
