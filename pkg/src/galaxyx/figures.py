"""Figure rendering for benchmark reports and softening sweeps.

Figures are written next to the delimited outputs so a bench run is
immediately inspectable without a separate plotting step.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import DeltaSweepResult, EvaluationReport

_MARKERS = ("o", "s", "^", "D", "v", "P", "X")


def _save_atomic(fig, path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=150, bbox_inches="tight")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def render_benchmark_figure(report: EvaluationReport, path) -> None:
    """Openness against mean weighted and rejection f-measure, one line per
    method, with a std-dev band over folds."""
    methods = sorted({r.method for r in report.results})
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2), sharex=True)
    panels = (
        (axes[0], "weighted f-measure", lambda r: (r.mean_f, r.std_f)),
        (axes[1], "rejection f-measure", lambda r: (r.mean_rejection_f, r.std_rejection_f)),
    )
    for ax, title, pick in panels:
        for i, method in enumerate(methods):
            rows = sorted(
                (r for r in report.results if r.method == method), key=lambda r: r.openness
            )
            xs = [r.openness for r in rows]
            means = [pick(r)[0] for r in rows]
            stds = [pick(r)[1] for r in rows]
            ax.errorbar(
                xs,
                means,
                yerr=stds,
                label=method,
                marker=_MARKERS[i % len(_MARKERS)],
                capsize=3,
            )
        ax.set_xlabel("openness")
        ax.set_ylabel(title)
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="best", fontsize=9)
    fig.suptitle("open-set benchmark")
    _save_atomic(fig, path)


def render_sweep_figure(sweep: DeltaSweepResult, path) -> None:
    """Softening value against mean f-measure with the winner marked."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    xs = [pt.delta for pt in sweep.points]
    ax.errorbar(
        xs,
        [pt.mean_f for pt in sweep.points],
        yerr=[pt.std_f for pt in sweep.points],
        marker="o",
        capsize=3,
        label="weighted f-measure",
    )
    ax.errorbar(
        xs,
        [pt.mean_rejection_f for pt in sweep.points],
        yerr=[pt.std_rejection_f for pt in sweep.points],
        marker="s",
        capsize=3,
        label="rejection f-measure",
    )
    ax.axvline(sweep.delta_star, color="gray", linestyle="--", label=f"best delta = {sweep.delta_star:g}")
    ax.set_xlabel("softening delta")
    ax.set_ylabel("mean f-measure")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    _save_atomic(fig, path)
