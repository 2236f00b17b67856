"""Matplotlib renderings for the reporting path.

Evaluation data stays in the text/CSV outputs; these helpers only draw from
an already-computed report so batch runs can skip them entirely.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dpselect import SubsetSearchResult

DPI = 120


def roc_figure(cell, path) -> Path:
    """One cell's pooled ROC curve: sensitivity against 100 - specificity."""
    fpr = [100.0 - spec for _, spec, _ in cell.roc]
    tpr = [sens for _, _, sens in cell.roc]
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(fpr, tpr, marker=".", lw=1.2)
    ax.plot([0, 100], [0, 100], ls="--", lw=0.8, color="gray")
    ax.set_xlabel("100 - specificity (%)")
    ax.set_ylabel("sensitivity (%)")
    ax.set_xlim(-2, 102)
    ax.set_ylim(-2, 102)
    auc_mean = cell.summary.get("auc", (None, None, 0))[0]
    title = f"density {cell.density}, stage {cell.stage}"
    if auc_mean is not None:
        title += f" (mean AUC {auc_mean:.1f})"
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def accuracy_summary_figure(report, path) -> Path:
    """Grouped bars of mean accuracy per density cell for both stages."""
    densities = []
    for density, _stage in report.cells:
        if density not in densities:
            densities.append(density)
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    width = 0.38
    for k, stage in enumerate((1, 2)):
        xs, ys = [], []
        for i, density in enumerate(densities):
            cell = report.cells.get((density, stage))
            if cell is None or cell.status != "ok":
                continue
            mean = cell.summary["accuracy"][0]
            if mean is None:
                continue
            xs.append(i + (k - 0.5) * width)
            ys.append(mean)
        ax.bar(xs, ys, width=width, label=f"stage {stage}")
    ax.set_xticks(range(len(densities)))
    ax.set_xticklabels(densities)
    ax.set_ylabel("mean accuracy (%)")
    ax.set_ylim(0, 105)
    ax.set_xlabel("density slice")
    ax.legend(fontsize=8)
    ax.set_title("accuracy by density cell", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def selection_curve_figure(result: SubsetSearchResult, path, title="subset search") -> Path:
    """Accuracy against ranked-prefix size, the subset-search trace."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(result.sizes, result.accuracies, lw=1.2)
    ax.axvline(result.chosen_size, ls="--", lw=0.8, color="tab:red")
    ax.set_xlabel("feature subset size")
    ax.set_ylabel("accuracy (%)")
    ax.set_title(f"{title} (chosen {result.chosen_size})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def sigma_sweep_figure(sweep: dict[float, float | None], path) -> Path:
    """Bar chart of mean accuracy per Gabor scale from a sigma sweep."""
    sigmas = sorted(sweep)
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    xs = range(len(sigmas))
    ys = [sweep[s] if sweep[s] is not None else 0.0 for s in sigmas]
    ax.bar(xs, ys, width=0.6)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"{s:g}" for s in sigmas])
    ax.set_xlabel("sigma")
    ax.set_ylabel("mean accuracy (%)")
    ax.set_ylim(0, 105)
    ax.set_title("accuracy by Gabor scale", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def render_report_figures(report, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for (density, stage), cell in report.cells.items():
        if cell.status != "ok":
            continue
        written.append(roc_figure(cell, out_dir / f"roc_{density}_stage{stage}.png"))
    written.append(accuracy_summary_figure(report, out_dir / "accuracy_summary.png"))
    return written
