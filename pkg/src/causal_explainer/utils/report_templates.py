"""
Run Report Templates

Renders the markdown report written next to every run's outputs.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

COMMAND_TITLES = {
    "train-classifier": "Classifier Training",
    "train-explainer": "Explainer Training",
    "select-params": "Parameter Selection",
    "sweep": "Latent Sweep",
    "influence": "Causal Influence Estimate",
    "intervene": "Latent Intervention",
    "landscape": "Objective Landscape",
    "certificate": "Capacity Certificate",
}

# Config keys shown in the report header, per subcommand
HEADLINE_KEYS = {
    "train-classifier": ["dataset", "classifier_hidden", "classifier_epochs", "classifier_learning_rate"],
    "train-explainer": ["backend", "K", "L", "lambda", "variant", "steps", "learning_rate"],
    "select-params": ["backend", "plateau_eps", "plateau_eps_c", "fidelity_slack", "l_max"],
    "sweep": ["sweep_factor", "sweep_span", "sweep_steps", "sweep_anchors"],
    "influence": ["influence_variants", "n_alpha", "n_beta", "n_x"],
    "intervene": ["intervene_factor"],
    "landscape": ["landscape_classifier", "grid_res_deg", "n_alpha", "n_beta"],
    "certificate": [],
}


def format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list) and len(value) > 8:
        head = ", ".join(format_value(v) for v in value[:8])
        return f"[{head}, … ({len(value)} values)]"
    if value is None:
        return "n/a"
    return str(value)


class ReportTemplateGenerator:
    """Generates run report titles and bodies."""

    @staticmethod
    def generate_title(command: str, metrics: Dict[str, Any]) -> str:
        """
        Generate the report title.

        Args:
            command: CLI subcommand
            metrics: Final metrics of the run

        Returns:
            Title string
        """
        title = COMMAND_TITLES.get(command, command)
        if command == "train-explainer" and "final_c" in metrics:
            return f"{title}: C = {metrics['final_c']:.4f} nats"
        if command == "select-params" and "K" in metrics:
            return f"{title}: K = {metrics['K']}, L = {metrics['L']}, λ = {format_value(metrics['lambda'])}"
        if command == "certificate" and "error_bound" in metrics:
            return f"{title}: π ≤ {metrics['error_bound']:.4f}"
        return title

    @staticmethod
    def generate_report(
        command: str,
        config: Dict[str, Any],
        metrics: Dict[str, Any],
        artifacts: Optional[List[str]] = None,
        notes: Optional[List[str]] = None,
    ) -> str:
        """
        Generate the markdown run report.

        Args:
            command: CLI subcommand
            config: Resolved configuration document
            metrics: Final metrics of the run
            artifacts: File names written to the output directory
            notes: Warnings or remarks worth surfacing

        Returns:
            Markdown-formatted report
        """
        settings = "\n".join(
            f"- **{key}**: `{format_value(config.get(key))}`"
            for key in ["seed", *HEADLINE_KEYS.get(command, [])]
            if key in config
        )
        metric_rows = "\n".join(
            f"| {key} | {format_value(value)} |" for key, value in sorted(metrics.items())
            if not isinstance(value, (dict, list)) or len(value) <= 8
        )

        notes_section = ""
        if notes:
            items = "\n".join(f"- {note}" for note in notes)
            notes_section = f"\n### Notes\n\n{items}\n"

        artifact_section = ""
        if artifacts:
            items = "\n".join(f"- `{name}`" for name in artifacts)
            artifact_section = f"\n### Artifacts\n\n{items}\n"

        generated = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M UTC")
        body = f"""## {ReportTemplateGenerator.generate_title(command, metrics)}

### Settings
{settings or "- defaults"}

### Results

| metric | value |
|---|---|
{metric_rows}
{notes_section}{artifact_section}
---
*Generated by causal-explainer `{command}` on {generated}. Full settings are in `resolved-config.yaml`.*
"""
        return body
