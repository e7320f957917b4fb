"""Render a benchmark report: delimited tables plus figures.

Writes ``report.csv`` (one row per decoder), ``per_case.csv`` (one row
per case and decoder), and two PNG figures — a metric comparison and,
when the guided decoder ran, the per-step KL profile against the
adaptation band.
"""
from __future__ import annotations

import csv
import os
from statistics import median

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import METRIC_NAMES, BenchmarkReport

_BAR_COLORS = ("#4878a8", "#e49444", "#5ba053", "#b8b0ac")


def write_report(
    report: BenchmarkReport,
    out_dir: str,
    sigma: float = 0.02,
) -> dict[str, str]:
    """Write tables and figures; returns {artifact name: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "report": os.path.join(out_dir, "report.csv"),
        "per_case": os.path.join(out_dir, "per_case.csv"),
        "metrics_fig": os.path.join(out_dir, "metrics_by_decoder.png"),
    }

    summary = report.summary()
    with open(paths["report"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["decoder", "cases", *METRIC_NAMES, "median_kl", "precision_at_1"])
        for decoder in report.decoders:
            agg = summary[decoder]
            writer.writerow(
                [
                    decoder,
                    len(report.rows(decoder)),
                    *[f"{agg[name]:.4f}" for name in METRIC_NAMES],
                    f"{agg['median_kl']:.6f}" if "median_kl" in agg else "",
                    f"{report.precision_at_1:.4f}",
                ]
            )

    with open(paths["per_case"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "decoder", *METRIC_NAMES, "text"])
        for outcome in report.outcomes:
            writer.writerow(
                [
                    outcome.case_id,
                    outcome.decoder,
                    *[f"{outcome.metrics[name]:.4f}" for name in METRIC_NAMES],
                    outcome.text,
                ]
            )

    _metrics_figure(report, summary, paths["metrics_fig"])
    if report.all_kls():
        paths["guidance_fig"] = os.path.join(out_dir, "guidance_trace.png")
        _guidance_figure(report, sigma, paths["guidance_fig"])
    return paths


def _metrics_figure(report: BenchmarkReport, summary: dict, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    x = np.arange(len(METRIC_NAMES))
    width = 0.8 / max(1, len(report.decoders))
    for i, decoder in enumerate(report.decoders):
        values = [summary[decoder][name] for name in METRIC_NAMES]
        # coverage lives on a 0-100 scale; draw everything on [0, 1]
        values = [v / 100.0 if name == "coverage" else v for name, v in zip(METRIC_NAMES, values)]
        ax.bar(
            x + i * width,
            values,
            width,
            label=decoder,
            color=_BAR_COLORS[i % len(_BAR_COLORS)],
        )
    ax.set_xticks(x + width * (len(report.decoders) - 1) / 2)
    ax.set_xticklabels([n.replace("_", "-") for n in METRIC_NAMES])
    ax.set_ylabel("score (coverage / 100)")
    ax.set_title("decoder comparison")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _guidance_figure(report: BenchmarkReport, sigma: float, path: str) -> None:
    rows = report.rows("kid")
    max_steps = max(len(o.kls) for o in rows)
    per_step = [
        [o.kls[i] for o in rows if len(o.kls) > i] for i in range(max_steps)
    ]
    med = [median(v) for v in per_step]

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for outcome in rows[:50]:
        ax.plot(range(len(outcome.kls)), outcome.kls, color="#c8d4e0", lw=0.6, zorder=1)
    ax.plot(range(max_steps), med, color="#30506e", lw=2.0, label="median KL", zorder=3)
    ax.axhspan(sigma / 2, 2 * sigma, color="#5ba053", alpha=0.15, zorder=0)
    ax.axhline(sigma / 2, color="#5ba053", lw=0.8, ls="--")
    ax.axhline(2 * sigma, color="#5ba053", lw=0.8, ls="--")
    ax.set_xlabel("step")
    ax.set_ylabel("per-step KL")
    ax.set_title("guidance strength vs. adaptation band")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
