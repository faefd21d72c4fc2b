"""Render benchmark reports to matplotlib figures, saved next to the CSVs.

Kept separate from the Monte Carlo harness on purpose: the harness emits
data only; the CLI report path calls into this module.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .experiments import AggregateReport  # noqa: E402


def _bar(ax, hist, color):
    if hist:
        xs = [b for b, _ in hist]
        cs = [c for _, c in hist]
        width = (xs[1] - xs[0]) * 0.9 if len(xs) > 1 else 0.9
        ax.bar(xs, cs, width=width, color=color, edgecolor="black", linewidth=0.4)
    ax.set_ylim(bottom=0)


def render_detection_histograms(report: AggregateReport, dest) -> Path:
    """One row per estimator: recovered components (left), false ones (right)."""
    names = list(report.summary)
    fig, axes = plt.subplots(len(names), 2, squeeze=False,
                             figsize=(9, 2.4 * len(names)))
    for i, name in enumerate(names):
        summ = report.summary[name]
        _bar(axes[i][0], summ["true_positive_histogram"], "tab:blue")
        _bar(axes[i][1], summ["false_positive_histogram"], "tab:red")
        axes[i][0].set_ylabel(name, fontsize=8)
        if i == 0:
            axes[i][0].set_title("recovered components")
            axes[i][1].set_title("false components")
    axes[-1][0].set_xlabel("count per trial")
    axes[-1][1].set_xlabel("count per trial")
    fig.tight_layout()
    dest = Path(dest)
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_sigma_histograms(report: AggregateReport, dest) -> Path | None:
    """Histogram of the noise-level estimates, one row per estimator."""
    names = [n for n, s in report.summary.items() if s["sigma_hat_histogram"]]
    if not names:
        return None
    fig, axes = plt.subplots(len(names), 1, squeeze=False,
                             figsize=(7, 2.2 * len(names)))
    for i, name in enumerate(names):
        hist = report.summary[name]["sigma_hat_histogram"]
        _bar(axes[i][0], hist, "tab:green")
        axes[i][0].set_ylabel(name, fontsize=8)
        axes[i][0].axvline(report.config.sigma, color="black", linestyle="--",
                           linewidth=0.8)
    axes[-1][0].set_xlabel("estimated noise level")
    fig.suptitle("noise-level estimates (dashed line: true value)", fontsize=10)
    fig.tight_layout()
    dest = Path(dest)
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_report_figures(report: AggregateReport, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [render_detection_histograms(report, outdir / "detections.png")]
    sig = render_sigma_histograms(report, outdir / "sigma_hat.png")
    if sig is not None:
        written.append(sig)
    return written
