"""Tests for the run report templates."""

from causal_explainer.utils.report_templates import ReportTemplateGenerator, format_value


def test_format_value():
    assert format_value(0.1234567891) == "0.123457"
    assert format_value(None) == "n/a"
    assert format_value([1, 2]) == "[1, 2]"
    assert format_value(list(range(10))).endswith("(10 values)]")


def test_titles_carry_the_headline_metric():
    assert ReportTemplateGenerator.generate_title("train-explainer", {"final_c": 0.5}) == (
        "Explainer Training: C = 0.5000 nats"
    )
    assert ReportTemplateGenerator.generate_title(
        "select-params", {"K": 2, "L": 4, "lambda": 0.05}
    ) == "Parameter Selection: K = 2, L = 4, λ = 0.05"
    assert "0.0495" in ReportTemplateGenerator.generate_title("certificate", {"error_bound": 0.04949})
    assert ReportTemplateGenerator.generate_title("sweep", {}) == "Latent Sweep"
    assert ReportTemplateGenerator.generate_title("unknown", {}) == "unknown"


def test_report_sections():
    report = ReportTemplateGenerator.generate_report(
        "train-explainer",
        {"seed": 3, "backend": "lingauss", "K": 1, "lambda": 0.05, "unrelated": "x"},
        {"final_c": 0.61, "K": 1, "flows": list(range(20))},
        artifacts=["explainer.ckpt"],
        notes=["lambda ladder exhausted"],
    )
    assert report.startswith("## Explainer Training: C = 0.6100 nats")
    assert "- **seed**: `3`" in report
    assert "- **backend**: `lingauss`" in report
    assert "unrelated" not in report
    assert "| final_c | 0.61 |" in report
    assert "flows" not in report
    assert "### Notes\n\n- lambda ladder exhausted" in report
    assert "- `explainer.ckpt`" in report


def test_report_without_extras():
    report = ReportTemplateGenerator.generate_report("certificate", {}, {"error_bound": 0.25})
    assert "- defaults" in report
    assert "### Notes" not in report
    assert "### Artifacts" not in report
