"""Campaign report emission: JSON summary, decay series table, figures.

Artifacts land under the output directory with stable names:

    ledger.jsonl       append-only evaluation/decision records
    report.json        route histogram, recovered decay rate, model summary
    decay_series.csv   (t, mean_iso_score, accept_fraction) rows
    figures/decay_curve.png
    figures/route_histogram.png

Everything except the figures and the report's dedicated ``generated_at``
field is a deterministic function of (config, master seed); determinism
comparisons strip that one field and ignore the rendered images.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path

from .campaign import CampaignResult
from .config import CampaignConfig

__all__ = ["build_report", "write_decay_series", "write_artifacts", "render_figures"]


def build_report(result: CampaignResult, config: CampaignConfig) -> dict:
    model_summary = None
    if result.model is not None:
        model_summary = result.model.to_wire()
    return {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "total_probes": len(list(result.ledger.of_kind("evaluation"))),
        "route_histogram": result.route_histogram,
        "per_t": list(result.per_t),
        "lambda_configured": config.decay.decay_rate,
        "lambda_hat": result.lambda_hat,
        "iar_model": model_summary,
        "fit_skipped_reason": result.fit_skipped_reason,
        "observation_count": result.observation_count,
        "headless_replay": config.replay_path is not None,
        "gamma_trajectory": list(result.gamma_trajectory),
        "thresholds": {
            "delta": config.thresholds.delta,
            "epsilon": config.thresholds.epsilon,
        },
    }


def write_decay_series(result: CampaignResult, path: Path) -> None:
    lines = ["t,mean_iso_score,accept_fraction"]
    for row in result.per_t:
        lines.append(f"{row['t']:g},{row['mean_iso_score']!r},{row['accept_fraction']!r}")
    path.write_text("\n".join(lines) + "\n")


def render_figures(result: CampaignResult, config: CampaignConfig, fig_dir: Path) -> list[Path]:
    """Render the decay curve and route histogram to PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []

    ts = [row["t"] for row in result.per_t]
    means = [row["mean_iso_score"] for row in result.per_t]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(ts, means, "o-", label="mean iso score")
    if result.lambda_hat is not None and means and means[0] > 0:
        dense = [ts[0] + i * (ts[-1] - ts[0]) / 200 for i in range(201)]
        c0 = means[0]
        ax.plot(
            dense,
            [c0 * math.exp(-result.lambda_hat * (t - ts[0])) for t in dense],
            "--",
            label=f"exp fit (rate={result.lambda_hat:.4f})",
        )
    ax.set_xlabel("t")
    ax.set_ylabel("mean iso score")
    ax.set_title("Attribution fidelity decay")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    decay_path = fig_dir / "decay_curve.png"
    fig.savefig(decay_path, dpi=120)
    plt.close(fig)
    written.append(decay_path)

    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    labels = list(result.route_histogram)
    counts = [result.route_histogram[k] for k in labels]
    ax.bar(labels, counts, color=["#2a9d8f", "#e9c46a", "#e76f51"])
    ax.set_ylabel("probes")
    ax.set_title("Route decisions")
    for i, count in enumerate(counts):
        ax.text(i, count, str(count), ha="center", va="bottom")
    fig.tight_layout()
    hist_path = fig_dir / "route_histogram.png"
    fig.savefig(hist_path, dpi=120)
    plt.close(fig)
    written.append(hist_path)
    return written


def write_artifacts(result: CampaignResult, config: CampaignConfig, out_dir: Path) -> dict:
    """Write report.json, decay_series.csv, and (optionally) figures.

    The ledger is written incrementally during the campaign when a path
    was given; this only covers the derived artifacts. Returns the paths
    written, keyed by artifact name.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    report = build_report(result, config)
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    series_path = out_dir / "decay_series.csv"
    write_decay_series(result, series_path)
    paths = {"report": report_path, "decay_series": series_path}
    if config.render_figures:
        for fig_path in render_figures(result, config, out_dir / "figures"):
            paths[fig_path.stem] = fig_path
    return paths
