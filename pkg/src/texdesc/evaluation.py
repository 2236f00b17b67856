"""Density-stratified evaluation protocol and report emission.

Every (density x stage) cell runs the same protocol: the slice is split into
stratified halves, each half trains while the other tests, and the two fold
results are averaged; this repeats 10 times with seeds 0..9 redrawing the
halves.  Feature selection and SVM fitting happen inside each training fold
only; descriptor extraction is per-patch and label-free, so it is shared.

Sensitivity, specificity and accuracy follow the usual confusion-count
definitions in percent.  A zero denominator yields an undefined value that is
excluded from aggregation and reported as ``NA`` with a defined-count note.
AUC accumulates 0.5 * (spec_k - spec_{k+1}) * (sens_k + sens_{k+1}) over the
threshold sweep, with tied scores collapsed into a single step, which equals
the Mann-Whitney pair-concordance statistic.

Cells whose classes cannot populate every training fold with at least two
records (class count < 4) are reported as explicitly absent rather than
evaluated, matching the all-benign rows of small density slices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dpselect import DEFAULT_CAP
from .errors import StatsError
from .patchio import Dataset, density_slice
from .pipeline import (
    DescriptorConfig,
    extract_matrix,
    fit_stage,
    stage1_labels,
    stage2_labels,
    stratified_halves,
    STAGE1,
    STAGE2,
)
from .svm import decision_values

DENSITY_CELLS = ("d", "e", "f", "g", "all")
METRICS = ("sensitivity", "specificity", "accuracy", "auc")
MIN_PER_CLASS = 4  # stratified halving then leaves >= 2 per class per fold


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    tn: int
    fp: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp


def metrics(c: ConfusionCounts) -> dict[str, float | None]:
    """Sensitivity/specificity/accuracy in percent; None when undefined."""
    sens = 100.0 * c.tp / (c.tp + c.fn) if (c.tp + c.fn) else None
    spec = 100.0 * c.tn / (c.fp + c.tn) if (c.fp + c.tn) else None
    acc = 100.0 * (c.tp + c.tn) / c.total if c.total else None
    return {"sensitivity": sens, "specificity": spec, "accuracy": acc}


def roc_points(scores, labels) -> list[tuple[float, float, float]]:
    """(threshold, specificity %, sensitivity %) triples, thresholds strictly
    descending from +inf to -inf; tied scores form one step."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    n_pos = int(np.sum(labels > 0))
    n_neg = int(np.sum(labels < 0))
    if n_pos == 0 or n_neg == 0:
        raise StatsError("ROC needs both classes present")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = (labels[order] > 0).astype(np.int64)

    points = [(np.inf, 100.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            tp += sorted_pos[j]
            fp += 1 - sorted_pos[j]
            j += 1
        points.append(
            (
                float(sorted_scores[i]),
                100.0 * (n_neg - fp) / n_neg,
                100.0 * tp / n_pos,
            )
        )
        i = j
    if points[-1][0] != -np.inf:
        points.append((-np.inf, 0.0, 100.0))
    return points


def auc(scores, labels) -> float:
    """Area under the tie-grouped ROC sweep, in [0, 100]."""
    pts = roc_points(scores, labels)
    total = 0.0
    for (_, spec_a, sens_a), (_, spec_b, sens_b) in zip(pts, pts[1:]):
        total += 0.5 * (spec_a - spec_b) * (sens_a + sens_b)
    return total / 100.0


@dataclass(frozen=True)
class FoldRecord:
    repeat: int
    fold: int
    seed: int
    counts: ConfusionCounts
    values: dict[str, float | None]
    chosen_size: int


@dataclass
class CellResult:
    density: str
    stage: int
    status: str  # ok | absent | error
    reason: str = ""
    class_counts: dict[str, int] = field(default_factory=dict)
    folds: list[FoldRecord] = field(default_factory=list)
    per_repeat: dict[str, list[float | None]] = field(default_factory=dict)
    summary: dict[str, tuple[float | None, float | None, int]] = field(default_factory=dict)
    roc: list[tuple[float, float, float]] = field(default_factory=list)


@dataclass
class EvaluationReport:
    config: DescriptorConfig
    seeds: tuple[int, ...]
    cells: dict[tuple[str, int], CellResult]

    @property
    def errored(self) -> bool:
        return any(cell.status == "error" for cell in self.cells.values())


def _stage_view(records, row_index, stage: int):
    """Rows, binary labels and class names for one stage of a slice."""
    if stage == 1:
        rows = list(row_index)
        y = stage1_labels(records)
        neg_name, pos_name = "normal", "abnormal"
        neg = int(np.sum(y < 0))
        pos = int(np.sum(y > 0))
    else:
        keep = [i for i, r in enumerate(records) if r.label != "normal"]
        rows = [row_index[i] for i in keep]
        sub = [records[i] for i in keep]
        y = stage2_labels(sub)
        neg_name, pos_name = "benign", "malignant"
        neg = int(np.sum(y < 0))
        pos = int(np.sum(y > 0))
    return rows, y, {neg_name: neg, pos_name: pos}


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None, int]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None, None, 0
    mean = float(np.mean(defined))
    std = float(np.std(defined, ddof=1)) if len(defined) > 1 else None
    return mean, std, len(defined)


def _evaluate_cell(
    density: str,
    stage: int,
    x_all: np.ndarray,
    records,
    row_index,
    config: DescriptorConfig,
    seeds,
) -> CellResult:
    rows, y, class_counts = _stage_view(records, row_index, stage)
    cell = CellResult(density=density, stage=stage, status="ok", class_counts=class_counts)
    small = {name: n for name, n in class_counts.items() if n < MIN_PER_CLASS}
    if small:
        cell.status = "absent"
        cell.reason = (
            "untrainable: "
            + ", ".join(f"{name}={n}" for name, n in sorted(class_counts.items()))
            + f" (need >= {MIN_PER_CLASS} per class)"
        )
        return cell

    x = x_all[np.asarray(rows, dtype=np.intp)]
    stage_name = STAGE1 if stage == 1 else STAGE2
    pooled_scores: list[float] = []
    pooled_labels: list[float] = []
    per_repeat: dict[str, list[float | None]] = {m: [] for m in METRICS}

    for repeat, seed in enumerate(seeds):
        rng = np.random.default_rng((seed, stage))
        half_a, half_b = stratified_halves(y, rng)
        fold_vals: dict[str, list[float | None]] = {m: [] for m in METRICS}
        for fold, (tr, te) in enumerate(((half_a, half_b), (half_b, half_a))):
            model = fit_stage(x[tr], y[tr], config, (seed, fold), stage_name)
            raw = decision_values(
                model.svm, x[np.ix_(te, model.selected_indices)]
            )
            pred = np.where(raw >= 0.0, 1.0, -1.0)
            yt = y[te]
            counts = ConfusionCounts(
                tp=int(np.sum((pred > 0) & (yt > 0))),
                fn=int(np.sum((pred < 0) & (yt > 0))),
                tn=int(np.sum((pred < 0) & (yt < 0))),
                fp=int(np.sum((pred > 0) & (yt < 0))),
            )
            values = metrics(counts)
            try:
                values["auc"] = auc(raw, yt)
            except StatsError:
                values["auc"] = None
            cell.folds.append(
                FoldRecord(
                    repeat=repeat,
                    fold=fold,
                    seed=seed,
                    counts=counts,
                    values=values,
                    chosen_size=model.search.chosen_size,
                )
            )
            for m in METRICS:
                fold_vals[m].append(values[m])
            pooled_scores.extend(float(v) for v in raw)
            pooled_labels.extend(float(v) for v in yt)
        for m in METRICS:
            defined = [v for v in fold_vals[m] if v is not None]
            per_repeat[m].append(float(np.mean(defined)) if defined else None)

    cell.per_repeat = per_repeat
    cell.summary = {m: _aggregate(per_repeat[m]) for m in METRICS}
    cell.roc = roc_points(pooled_scores, pooled_labels)
    return cell


def cross_validate(
    ds: Dataset,
    density: str = "all",
    config: DescriptorConfig = DescriptorConfig(),
    repeats: int = 10,
    seeds=None,
    workers: int | None = None,
) -> EvaluationReport:
    """Evaluate both stages on one density slice."""
    return evaluate_grid(
        ds, config, densities=(density,), repeats=repeats, seeds=seeds, workers=workers
    )


def evaluate_grid(
    ds: Dataset,
    config: DescriptorConfig = DescriptorConfig(),
    densities=DENSITY_CELLS,
    repeats: int = 10,
    seeds=None,
    workers: int | None = None,
) -> EvaluationReport:
    """Evaluate every requested density cell with one shared extraction pass."""
    if seeds is None:
        seeds = tuple(range(repeats))
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) != repeats:
        raise StatsError(f"need {repeats} seeds, got {len(seeds)}")

    if len(ds):
        _, x_all = extract_matrix(config, ds.records, workers=workers)
    else:
        x_all = np.empty((0, 0))
    id_to_row = {rec.id: i for i, rec in enumerate(ds.records)}

    cells: dict[tuple[str, int], CellResult] = {}
    for density in densities:
        sl = density_slice(ds, density)
        rows = [id_to_row[rec.id] for rec in sl.records]
        for stage in (1, 2):
            key = (density, stage)
            if not len(sl):
                cells[key] = CellResult(
                    density=density, stage=stage, status="absent",
                    reason="untrainable: slice holds no records",
                )
                continue
            try:
                cells[key] = _evaluate_cell(
                    density, stage, x_all, sl.records, rows, config, seeds
                )
            except Exception as exc:  # genuine failure, not data scarcity
                cells[key] = CellResult(
                    density=density, stage=stage, status="error",
                    reason=f"{type(exc).__name__}: {exc}",
                )
    return EvaluationReport(config=config, seeds=seeds, cells=cells)


# --- report emission --------------------------------------------------------


def _fmt(v: float | None) -> str:
    return "NA" if v is None else f"{v:.6f}"


def _fmt_threshold(t: float) -> str:
    if np.isposinf(t):
        return "inf"
    if np.isneginf(t):
        return "-inf"
    return repr(float(t))


def roc_csv_name(density: str, stage: int) -> str:
    return f"roc_{density}_stage{stage}.csv"


def render_report_text(report: EvaluationReport) -> str:
    lines = ["texdesc evaluation report"]
    lines.append(f"descriptor: {report.config.descriptor}")
    if report.config.descriptor == "hot":
        lines.append(f"sigma: {report.config.sigma!r}")
    if report.config.descriptor == "pbdct":
        lines.append(f"keep_fraction: {report.config.keep_fraction!r}")
    lines.append(f"enhance: {report.config.enhance}")
    lines.append(f"kernel: {report.config.kernel}")
    lines.append(f"select_cap: {report.config.select_cap}")
    lines.append(f"config_digest: {report.config.digest()}")
    lines.append(f"repeats: {len(report.seeds)}")
    lines.append("seeds: " + ",".join(str(s) for s in report.seeds))
    for (density, stage), cell in report.cells.items():
        lines.append("")
        lines.append(f"[cell density={density} stage={stage}]")
        lines.append(f"status: {cell.status}")
        if cell.status != "ok":
            lines.append(f"reason: {cell.reason}")
            continue
        lines.append(
            "classes: "
            + ", ".join(f"{k}={v}" for k, v in cell.class_counts.items())
        )
        lines.append(
            "folds: repeat,fold,seed,tp,fn,tn,fp,"
            "sensitivity,specificity,accuracy,auc,chosen_size"
        )
        for fr in cell.folds:
            c = fr.counts
            lines.append(
                f"  {fr.repeat},{fr.fold},{fr.seed},{c.tp},{c.fn},{c.tn},{c.fp},"
                f"{_fmt(fr.values['sensitivity'])},{_fmt(fr.values['specificity'])},"
                f"{_fmt(fr.values['accuracy'])},{_fmt(fr.values['auc'])},{fr.chosen_size}"
            )
        lines.append("per_repeat: repeat," + ",".join(METRICS))
        for r in range(len(report.seeds)):
            row = ",".join(_fmt(cell.per_repeat[m][r]) for m in METRICS)
            lines.append(f"  {r},{row}")
        for m in METRICS:
            mean, std, n_defined = cell.summary[m]
            lines.append(f"{m}_mean: {_fmt(mean)}")
            lines.append(f"{m}_std: {_fmt(std)}")
            lines.append(f"{m}_defined: {n_defined}")
        lines.append(f"roc_file: {roc_csv_name(density, stage)}")
    return "\n".join(lines) + "\n"


def emit_report(report: EvaluationReport, out_dir, figures: bool = True) -> list:
    """Write report.txt, per-cell ROC CSVs and (optionally) figures.

    Returns the list of written paths.  Plot rendering lives in
    :mod:`texdesc.figures`; pass ``figures=False`` for data-only output.
    """
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = out_dir / "report.txt"
    report_path.write_text(render_report_text(report), encoding="utf-8")
    written.append(report_path)

    for (density, stage), cell in report.cells.items():
        if cell.status != "ok":
            continue
        csv_path = out_dir / roc_csv_name(density, stage)
        rows = ["threshold,spec,sens"]
        for thr, spec, sens in cell.roc:
            rows.append(f"{_fmt_threshold(thr)},{spec:.6f},{sens:.6f}")
        csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        written.append(csv_path)

    if figures:
        from .figures import render_report_figures

        written.extend(render_report_figures(report, out_dir))
    return written
