"""
Run Configuration

Training settings for the explainer and the classifier, plus the flat YAML
run configuration read by every CLI subcommand.
"""

import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..models.classifiers import ClassifierTrainConfig
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "CAUSAL_EXPLAINER_CONFIG"
RESOLVED_CONFIG_NAME = "resolved-config.yaml"

VARIANT_NAMES = (
    "joint",
    "independent-unconditional",
    "independent-conditional",
    "joint-conditional",
)


@dataclass
class TrainConfig:
    """Settings for maximizing C + λ·D over a generative map."""

    K: int = 1
    L: int = 1
    lam: float = 0.05
    n_alpha: int = 100
    n_beta: int = 25
    n_x: int = 1
    steps: int = 8000
    batch_size: int = 64
    learning_rate: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    variant: str = "joint"
    gamma: float = 0.05
    normalize_columns: bool = True
    vae_hidden: Tuple[int, ...] = (256, 128)
    decode_mode: str = "mean"
    log_every: int = 100

    def validate(self) -> "TrainConfig":
        """Check invariants and return self, raising ConfigError on the first violation."""
        if self.K < 0 or self.L < 0 or self.K + self.L < 1:
            raise ConfigError(f"latent counts need K, L >= 0 and K+L >= 1, got K={self.K}, L={self.L}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")
        if min(self.n_alpha, self.n_beta, self.n_x) < 1:
            raise ConfigError(
                f"estimator budgets must be >= 1, got n_alpha={self.n_alpha}, "
                f"n_beta={self.n_beta}, n_x={self.n_x}"
            )
        if self.steps < 0 or self.batch_size < 1 or self.log_every < 1:
            raise ConfigError("steps must be >= 0, batch_size and log_every >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.variant not in VARIANT_NAMES:
            raise ConfigError(f"unknown variant '{self.variant}', expected one of {VARIANT_NAMES}")
        if self.decode_mode not in ("mean", "sample"):
            raise ConfigError(f"decode_mode must be 'mean' or 'sample', got '{self.decode_mode}'")
        return self

    def with_latents(self, K: int, L: int, lam: Optional[float] = None) -> "TrainConfig":
        values = asdict(self)
        values.update(K=K, L=L)
        if lam is not None:
            values["lam"] = lam
        return TrainConfig(**values)


class RunConfig(BaseModel):
    """Flat run configuration; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    # Run
    output_dir: str = "runs/latest"
    seed: int = 0
    backend: Literal["lingauss", "vae"] = "lingauss"

    # Dataset
    dataset: Literal[
        "isotropic-gaussian",
        "two-gaussian-labeled",
        "low-rank-gaussian",
        "three-class-gaussian",
        "idx",
    ] = "isotropic-gaussian"
    data_dim: int = 2
    n_samples: int = 10000
    rank: int = 2
    idx_images: Optional[str] = None
    idx_labels: Optional[str] = None
    class_filter: List[int] = Field(default_factory=list)

    # Classifier
    classifier: Literal["linear", "and", "mlp", "constant"] = "linear"
    classifier_a: List[float] = Field(default_factory=lambda: [1.0, 0.0])
    classifier_a2: List[float] = Field(default_factory=lambda: [0.0, 1.0])
    sigmoid: Literal["normal-cdf", "logistic"] = "normal-cdf"
    steepness: float = 1.0
    constant_probs: List[float] = Field(default_factory=lambda: [0.5, 0.5])
    classifier_checkpoint: Optional[str] = None
    classifier_hidden: List[int] = Field(default_factory=lambda: [64, 64])
    classifier_epochs: int = 10
    classifier_batch_size: int = 64
    classifier_learning_rate: float = 0.1
    classifier_momentum: float = 0.5

    # Explainer training
    explainer_checkpoint: Optional[str] = None
    K: int = 1
    L: int = 1
    lam: float = Field(0.05, alias="lambda")
    n_alpha: int = 100
    n_beta: int = 25
    n_x: int = 1
    steps: int = 8000
    batch_size: int = 64
    learning_rate: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    variant: str = "joint"
    gamma: float = 0.05
    normalize_columns: bool = True
    vae_hidden: List[int] = Field(default_factory=lambda: [256, 128])
    decode_mode: Literal["mean", "sample"] = "mean"
    log_every: int = 100

    # Parameter selection
    plateau_eps: float = 0.02
    plateau_eps_c: float = 0.05
    fidelity_slack: float = 0.05
    l_max: int = 16
    k_max: Optional[int] = None

    # Explanations
    influence_variants: List[str] = Field(default_factory=lambda: ["joint"])
    sweep_factor: int = 0
    sweep_span: float = 3.0
    sweep_steps: int = 7
    sweep_anchors: int = 4
    intervene_factor: Optional[int] = None
    landscape_classifier: Literal["single", "and"] = "single"
    grid_res_deg: float = 15.0
    landscape_lambdas: List[float] = Field(default_factory=lambda: [0.01, 1.0])

    @model_validator(mode="after")
    def _check_required(self) -> "RunConfig":
        if self.dataset == "idx":
            missing = [k for k in ("idx_images", "idx_labels") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"missing config key(s) for idx dataset: {', '.join(missing)}")
        for variant in self.influence_variants:
            if variant not in VARIANT_NAMES:
                raise ValueError(f"unknown influence variant '{variant}'")
        return self

    def train_config(self) -> TrainConfig:
        """Build the explainer TrainConfig from the flat keys."""
        return TrainConfig(
            K=self.K,
            L=self.L,
            lam=self.lam,
            n_alpha=self.n_alpha,
            n_beta=self.n_beta,
            n_x=self.n_x,
            steps=self.steps,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            seed=self.seed,
            variant=self.variant,
            gamma=self.gamma,
            normalize_columns=self.normalize_columns,
            vae_hidden=tuple(self.vae_hidden),
            decode_mode=self.decode_mode,
            log_every=self.log_every,
        ).validate()

    def classifier_config(self) -> ClassifierTrainConfig:
        return ClassifierTrainConfig(
            hidden=tuple(self.classifier_hidden),
            epochs=self.classifier_epochs,
            batch_size=self.classifier_batch_size,
            learning_rate=self.classifier_learning_rate,
            momentum=self.classifier_momentum,
            seed=self.seed,
        )

    def to_document(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


def _format_validation_error(error: ValidationError) -> str:
    problems = []
    for item in error.errors():
        key = ".".join(str(part) for part in item.get("loc", ())) or "<config>"
        problems.append(f"{key}: {item.get('msg', 'invalid value')}")
    return "; ".join(problems)


def load_run_config(path: Optional[str] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load and validate a run configuration.

    The path falls back to the CAUSAL_EXPLAINER_CONFIG environment variable
    (a ``.env`` file in the working directory is read first). Without any
    path the defaults are used. Overrides with value None are ignored.

    Args:
        path: YAML file holding a flat mapping
        overrides: Keys taken from the command line

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: Unreadable file, nested values, unknown keys or bad values
    """
    load_dotenv(find_dotenv(usecwd=True))
    path = path or os.getenv(CONFIG_ENV_VAR)

    document: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, "r") as f:
                loaded = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"config file {path} is not valid YAML: {e}") from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a flat key-value mapping")
        document.update(loaded)
        logger.info(f"Loaded run config from {path}")
    else:
        logger.warning("No config file given, using defaults")

    nested = sorted(str(k) for k, v in document.items() if isinstance(v, dict))
    if nested:
        raise ConfigError(f"config must be flat, nested mappings under: {', '.join(nested)}")

    for key, value in (overrides or {}).items():
        if value is not None:
            document[key] = value

    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {_format_validation_error(e)}") from e


def write_resolved_config(config: RunConfig, output_dir: str) -> Path:
    """Write the fully resolved configuration beside a run's outputs."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / RESOLVED_CONFIG_NAME
    with open(path, "w") as f:
        f.write("# resolved run configuration\n")
        yaml.safe_dump(config.to_document(), f, sort_keys=True, default_flow_style=None)
    return path
