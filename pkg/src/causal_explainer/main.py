"""
Main Entry Point for the Causal Explainer CLI

Each subcommand reads a flat run configuration, runs one step of the
explanation workflow, and writes its artifacts, the resolved configuration,
summary.json and report.md to the output directory.
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

from . import __version__
from .analyzers.capacity import capacity_certificate
from .analyzers.evaluation import (
    encode_anchors,
    intervention_table,
    latent_sweep,
    per_factor_information_flow,
)
from .analyzers.influence import Variant, estimate_influence, map_prediction_error
from .analyzers.landscape import angle_landscape
from .analyzers.lingauss import line_angle_degrees, quadrature_influence
from .core.probability import SeededRng
from .datasets.base import LabeledData
from .datasets.idx import load_idx
from .datasets.synthetic import synth_dataset
from .explainer.config import RunConfig, load_run_config, write_resolved_config
from .explainer.selection import select_params
from .explainer.training import train_explainer
from .models.classifiers import (
    AndClassifier,
    ClassifierHandle,
    ConstantClassifier,
    LinearSigmoidClassifier,
    train_mlp_classifier,
)
from .models.generative import GenerativeMap, LinearGaussianMap, VaeModel
from .storage.checkpoint import load_checkpoint, save_checkpoint
from .storage.export import (
    tile_sweep,
    write_csv,
    write_intervention_csv,
    write_landscape_csv,
    write_pgm,
    write_selection_csv,
    write_summary,
    write_sweep_csv,
    write_trace_csv,
)
from .utils.errors import ConfigError, DimensionError, ExitCode, ExplainerError
from .utils.logging_config import get_logger, setup_logging
from .utils.report_templates import ReportTemplateGenerator

logger = get_logger(__name__)

CLASSIFIER_KINDS = ("mlp-classifier", "linear-classifier", "and-classifier", "constant-classifier")
EXPLAINER_KINDS = ("lingauss", "vae")
REPORT_NAME = "report.md"


@dataclass
class RunData:
    """Training and validation samples of a run, plus the image shape for IDX data."""

    train: LabeledData
    validation: Optional[LabeledData] = None
    image_shape: Optional[Tuple[int, int]] = None


@dataclass
class CommandResult:
    """What a subcommand hands back for the summary and report."""

    metrics: Dict[str, Any]
    artifacts: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


def load_data(cfg: RunConfig) -> RunData:
    """
    Load the run's dataset.

    Synthetic data is split like IDX data: the first 5/6 trains, the rest validates.

    Args:
        cfg: Run configuration

    Returns:
        RunData
    """
    if cfg.dataset == "idx":
        dataset = load_idx(cfg.idx_images, cfg.idx_labels, cfg.class_filter)
        return RunData(dataset.train, dataset.validation, (dataset.rows, dataset.cols))

    params = {"data_dim": cfg.data_dim, "n_samples": cfg.n_samples, "rank": cfg.rank}
    data = synth_dataset(cfg.dataset, params, SeededRng(cfg.seed).stream("data"))
    n_train = data.num_samples * 5 // 6
    if n_train in (0, data.num_samples):
        return RunData(data)
    index = np.arange(data.num_samples)
    return RunData(data.subset(index[:n_train]), data.subset(index[n_train:]))


def build_classifier(cfg: RunConfig, input_dim: int) -> ClassifierHandle:
    """
    Classifier named by the config: a checkpoint when given, else an analytic one.

    Raises:
        ConfigError: MLP requested without a checkpoint
        DimensionError: Classifier input dimension differs from the data
    """
    if cfg.classifier_checkpoint:
        f = load_checkpoint(cfg.classifier_checkpoint, CLASSIFIER_KINDS)
    elif cfg.classifier == "linear":
        f = LinearSigmoidClassifier(cfg.classifier_a, cfg.sigmoid, cfg.steepness)
    elif cfg.classifier == "and":
        f = AndClassifier(cfg.classifier_a, cfg.classifier_a2, cfg.steepness)
    elif cfg.classifier == "constant":
        f = ConstantClassifier(cfg.constant_probs, input_dim)
    else:
        raise ConfigError(
            "missing config key: classifier_checkpoint (an mlp classifier comes from train-classifier)"
        )
    if f.input_dim != input_dim:
        raise DimensionError(f"classifier expects dimension {f.input_dim}, data has dimension {input_dim}")
    return f


def load_explainer(cfg: RunConfig, f: ClassifierHandle) -> GenerativeMap:
    if not cfg.explainer_checkpoint:
        raise ConfigError("missing config key: explainer_checkpoint (produced by train-explainer)")
    g = load_checkpoint(cfg.explainer_checkpoint, EXPLAINER_KINDS)
    if g.data_dim != f.input_dim:
        raise DimensionError(f"explainer emits dimension {g.data_dim}, classifier expects {f.input_dim}")
    return g


def _labeled_eval_data(data: RunData) -> LabeledData:
    if data.validation is not None and data.validation.labels is not None:
        return data.validation
    if data.train.labels is None:
        raise ConfigError("this command needs a labeled dataset")
    return data.train


def cmd_train_classifier(cfg: RunConfig, out: Path) -> CommandResult:
    data = load_data(cfg)
    f = train_mlp_classifier(data.train, cfg.classifier_config(), data.validation,
                             cfg.class_filter or None)
    path = save_checkpoint(f, out / "classifier.ckpt")
    return CommandResult(
        metrics={
            "classes": list(f.class_labels),
            "train_accuracy": f.train_accuracy,
            "validation_accuracy": f.validation_accuracy,
            "train_samples": data.train.num_samples,
        },
        artifacts=[path.name],
    )


def cmd_train_explainer(cfg: RunConfig, out: Path) -> CommandResult:
    data = load_data(cfg)
    f = build_classifier(cfg, data.train.dim)
    train_cfg = cfg.train_config()
    backend: Any = cfg.backend
    if cfg.explainer_checkpoint:
        backend = load_explainer(cfg, f)
    g, trace = train_explainer(backend, f, data.train, train_cfg)

    artifacts = [save_checkpoint(g, out / "explainer.ckpt").name,
                 write_trace_csv(out / "trace.csv", trace).name]
    metrics: Dict[str, Any] = {
        "backend": g.kind,
        "K": g.K,
        "L": g.L,
        "lambda": train_cfg.lam,
        "variant": train_cfg.variant,
        "final_c": trace.final_c,
        "final_d": trace.final_d,
        "final_total": trace.final_total,
    }
    if isinstance(g, LinearGaussianMap) and isinstance(f, LinearSigmoidClassifier) and g.K >= 1:
        metrics["angle_alpha_a_deg"] = line_angle_degrees(g.W_alpha[:, 0], f.a)
        if g.L:
            metrics["max_angle_beta_a_deg"] = max(
                line_angle_degrees(g.W_beta[:, j], f.a) for j in range(g.L)
            )
        if f.sigmoid_kind == "normal-cdf" and g.K == 1:
            metrics["quadrature_c"] = quadrature_influence(g, f.a, steepness=f.steepness)
    return CommandResult(metrics, artifacts)


def cmd_select_params(cfg: RunConfig, out: Path) -> CommandResult:
    data = load_data(cfg)
    f = build_classifier(cfg, data.train.dim)
    K, L, lam, selection = select_params(
        cfg.backend, f, data.train, cfg.train_config(),
        plateau_eps_c=cfg.plateau_eps_c,
        fidelity_slack=cfg.fidelity_slack,
        plateau_eps=cfg.plateau_eps,
        l_max=cfg.l_max,
        k_max=cfg.k_max,
    )
    notes = []
    if not selection.budget_plateaued:
        notes.append(f"D did not plateau within l_max={cfg.l_max} factors")
    if selection.rows and selection.rows[0].plateau:
        notes.append("C at K=1 is below the noise floor; the classifier may carry no signal")
    if any(not row.fidelity_met for row in selection.rows):
        notes.append("lambda ladder exhausted for at least one split")
    path = write_selection_csv(out / "selection.csv", selection)
    metrics = {
        "K": K,
        "L": L,
        "lambda": lam,
        "latent_budget": selection.latent_budget,
        "d_reference": selection.d_reference,
        "budget_plateaued": selection.budget_plateaued,
        "k_plus_l_conserved": selection.k_plus_l_conserved(),
    }
    return CommandResult(metrics, [path.name], notes)


def cmd_sweep(cfg: RunConfig, out: Path) -> CommandResult:
    data = load_data(cfg)
    f = build_classifier(cfg, data.train.dim)
    g = load_explainer(cfg, f)
    source = data.validation or data.train
    count = min(cfg.sweep_anchors, source.num_samples)
    if isinstance(g, VaeModel):
        anchors = encode_anchors(g, source.x[:count])
    else:
        anchors = SeededRng(cfg.seed).stream("anchors").normal((count, g.latent_dim))
    grid = latent_sweep(g, f, anchors, cfg.sweep_factor, cfg.sweep_span, cfg.sweep_steps)

    artifacts = [write_sweep_csv(out / "sweep.csv", grid).name]
    if data.image_shape is not None:
        mosaic = tile_sweep(grid, *data.image_shape)
        artifacts.append(write_pgm(out / f"sweep-factor{cfg.sweep_factor}.pgm", mosaic).name)
    spread = grid.probs.max(axis=1) - grid.probs.min(axis=1)
    return CommandResult(
        metrics={
            "factor": cfg.sweep_factor,
            "anchors": count,
            "steps": cfg.sweep_steps,
            "mean_probability_range": float(spread.max(axis=1).mean()),
        },
        artifacts=artifacts,
    )


def cmd_influence(cfg: RunConfig, out: Path) -> CommandResult:
    data = load_data(cfg)
    f = build_classifier(cfg, data.train.dim)
    g = load_explainer(cfg, f)
    rng = SeededRng(cfg.seed).stream("influence")

    metrics: Dict[str, Any] = {"K": g.K, "L": g.L, "n_alpha": cfg.n_alpha, "n_beta": cfg.n_beta}
    rows = []
    for name in cfg.influence_variants:
        variant = Variant(name)
        estimate = estimate_influence(g, f, variant, cfg.n_alpha, cfg.n_beta, rng.stream(name), cfg.n_x)
        metrics[variant.symbol] = estimate.value
        rows.append([variant.value, variant.symbol, estimate.value])

    flows = per_factor_information_flow(g, f, cfg.n_alpha, cfg.n_beta, rng.stream("flow"), cfg.n_x)
    metrics["factor_flows"] = flows.tolist()
    rows.extend([f"factor{i}", f"I(z{i};Y)", value] for i, value in enumerate(flows))

    if g.K >= 1:
        joint = metrics.get("C")
        if joint is None:
            joint = estimate_influence(g, f, Variant.JOINT, cfg.n_alpha, cfg.n_beta,
                                       rng.stream("joint"), cfg.n_x).value
        clamped = float(np.clip(joint, 0.0, np.log(f.num_classes)))
        metrics["map_error"] = map_prediction_error(g, f, cfg.n_alpha, cfg.n_beta,
                                                    rng.stream("map-error"), cfg.n_x)
        metrics["error_bound"] = capacity_certificate(clamped, f.num_classes)

    path = write_csv(out / "influence.csv", ["name", "symbol", "nats"], rows)
    return CommandResult(metrics, [path.name])


def cmd_intervene(cfg: RunConfig, out: Path) -> CommandResult:
    data = load_data(cfg)
    f = build_classifier(cfg, data.train.dim)
    g = load_explainer(cfg, f)
    factors = None if cfg.intervene_factor is None else [cfg.intervene_factor]
    results = intervention_table(g, f, _labeled_eval_data(data), SeededRng(cfg.seed), factors)
    path = write_intervention_csv(out / "intervention.csv", results)
    metrics: Dict[str, Any] = {}
    for r in results:
        metrics[f"drop_factor{r.factor}"] = r.drop
    if results:
        metrics["original_accuracy"] = results[0].original_acc
        metrics["reencoded_accuracy"] = results[0].reencoded_acc
    return CommandResult(metrics, [path.name])


def cmd_landscape(cfg: RunConfig, out: Path) -> CommandResult:
    landscape = angle_landscape(
        cfg.landscape_classifier,
        cfg.influence_variants,
        grid_res=cfg.grid_res_deg,
        n_alpha=cfg.n_alpha,
        n_beta=cfg.n_beta,
        rng=SeededRng(cfg.seed).stream("landscape"),
        gamma=cfg.gamma,
    )
    metrics: Dict[str, Any] = {"cells": int(landscape.fidelity.size)}
    for name in cfg.influence_variants:
        symbol = Variant(name).symbol
        for lam in [0.0, *cfg.landscape_lambdas]:
            theta1, theta2 = landscape.argmax(name, lam)
            metrics[f"{symbol}_lambda{lam:g}_argmax"] = [theta1, theta2]
            metrics[f"{symbol}_lambda{lam:g}_separation_deg"] = landscape.separation(name, lam)
    path = write_landscape_csv(out / "landscape.csv", landscape)
    return CommandResult(metrics, [path.name])


def cmd_certificate(cfg: RunConfig, out: Path, mi_nats: float, classes: int) -> CommandResult:
    bound = capacity_certificate(mi_nats, classes)
    return CommandResult({"mi_nats": mi_nats, "classes": classes, "error_bound": bound})


def print_summary(command: str, metrics: Dict[str, Any]) -> None:
    table = Table(title=ReportTemplateGenerator.generate_title(command, metrics))
    table.add_column("metric")
    table.add_column("value", justify="right")
    for key, value in sorted(metrics.items()):
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    Console().print(table)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Path to a run configuration file")
    common.add_argument("--output-dir", type=str, default=None, help="Directory for run outputs")
    common.add_argument("--seed", type=int, default=None, help="Override the configured seed")
    common.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="INFO",
        help="Logging level"
    )
    common.add_argument("--log-file", type=str, default=None, help="Path to log file (optional)")
    common.add_argument("--quiet-steps", action="store_true", help="Hide per-step training progress")

    parser = argparse.ArgumentParser(
        prog="causal-explainer",
        description="Causal Explainer - learn generative causal explanations of classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train-classifier", parents=[common], help="Train the MLP classifier")

    p = sub.add_parser("train-explainer", parents=[common], help="Train a generative explainer")
    p.add_argument("--backend", choices=["lingauss", "vae"], default=None)
    p.add_argument("--K", type=int, default=None, help="Causal factor count")
    p.add_argument("--L", type=int, default=None, help="Noncausal factor count")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="Fidelity weight")
    p.add_argument("--steps", type=int, default=None, help="Training steps")

    p = sub.add_parser("select-params", parents=[common], help="Choose K, L and lambda")
    p.add_argument("--backend", choices=["lingauss", "vae"], default=None)
    p.add_argument("--l-max", type=int, default=None, help="Largest latent budget tried")

    p = sub.add_parser("sweep", parents=[common], help="Sweep one latent factor")
    p.add_argument("--factor", type=int, default=None, help="Latent index to sweep")
    p.add_argument("--sweep-steps", type=int, default=None, help="Odd number of sweep values")

    sub.add_parser("influence", parents=[common], help="Estimate causal influence")

    p = sub.add_parser("intervene", parents=[common], help="Accuracy drop under latent interventions")
    p.add_argument("--factor", type=int, default=None, help="Latent index, every index when omitted")

    p = sub.add_parser("landscape", parents=[common], help="Objective landscape over column angles")
    p.add_argument("--classifier", choices=["single", "and"], default=None)
    p.add_argument("--grid-res", type=float, default=None, help="Angular step in degrees")

    p = sub.add_parser("certificate", parents=[common], help="Capacity certificate from I(alpha;Y)")
    p.add_argument("--mi-nats", type=float, required=True, help="I(alpha;Y) in nats")
    p.add_argument("--classes", type=int, required=True, help="Number of classes M")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    mapping = {
        "output_dir": "output_dir",
        "seed": "seed",
        "backend": "backend",
        "K": "K",
        "L": "L",
        "lam": "lambda",
        "steps": "steps",
        "l_max": "l_max",
        "sweep_steps": "sweep_steps",
        "classifier": "landscape_classifier",
        "grid_res": "grid_res_deg",
    }
    overrides = {key: getattr(args, attr) for attr, key in mapping.items() if hasattr(args, attr)}
    if hasattr(args, "factor"):
        overrides["intervene_factor" if args.command == "intervene" else "sweep_factor"] = args.factor
    return overrides


COMMANDS: Dict[str, Callable[[RunConfig, Path], CommandResult]] = {
    "train-classifier": cmd_train_classifier,
    "train-explainer": cmd_train_explainer,
    "select-params": cmd_select_params,
    "sweep": cmd_sweep,
    "influence": cmd_influence,
    "intervene": cmd_intervene,
    "landscape": cmd_landscape,
}


def run_command(args: argparse.Namespace) -> None:
    """
    Run one subcommand and write its summary, report and resolved config.

    Args:
        args: Parsed command-line arguments
    """
    cfg = load_run_config(args.config, _overrides(args))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = write_resolved_config(cfg, str(out))
    logger.info(f"Resolved config written to {resolved}")

    if args.command == "certificate":
        result = cmd_certificate(cfg, out, args.mi_nats, args.classes)
    else:
        result = COMMANDS[args.command](cfg, out)

    artifacts = [*result.artifacts, resolved.name]
    summary = write_summary(out, args.command, result.metrics, artifacts)
    report = ReportTemplateGenerator.generate_report(
        args.command, cfg.to_document(), result.metrics, artifacts, result.notes
    )
    (out / REPORT_NAME).write_text(report, encoding="utf-8")
    for note in result.notes:
        logger.warning(note)
    for name in [*artifacts, summary.name, REPORT_NAME]:
        logger.info(f"Wrote {out / name}")
    print_summary(args.command, result.metrics)


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the CLI and return the process exit code.

    Args:
        argv: Arguments without the program name, default sys.argv[1:]

    Returns:
        0 on success, the error's exit code otherwise
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else int(ExitCode.CONFIG)

    setup_logging(level=args.log_level, log_file=args.log_file, quiet_steps=args.quiet_steps)

    logger.info("=" * 60)
    logger.info(f"Causal Explainer v{__version__}: {args.command}")
    logger.info("=" * 60)

    try:
        run_command(args)
    except ExplainerError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Shutting down...")
        return int(ExitCode.INTERRUPTED)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return int(ExitCode.INTERNAL)
    return int(ExitCode.OK)


def main() -> None:
    """Main entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
