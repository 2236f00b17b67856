"""Discrimination-potentiality feature ranking and incremental subset search.

Each feature k gets the two-class separation score

    DP_k = |mean_a - mean_b| / sqrt(var_a/n_a + var_b/n_b)

with unbiased (n-1) variances: the magnitude of Welch's t statistic.  A zero
denominator yields 0 when the means agree and +inf otherwise, so perfectly
constant-but-separated features rank first.  Ranking sorts scores descending,
ties broken by ascending feature index.

The historical form of the score with a minus under the radical is kept
behind ``formula="printed"`` for comparison runs; its radicand can go
negative, in which case the score is NaN and ranks last.

Subset search walks prefixes of the ranking from size 5 up to a cap, scoring
each with a caller-supplied evaluator (here: seeded cross-validation on the
training split), and keeps the smallest prefix achieving the best accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SelectionError, StatsError

MIN_SUBSET = 5
DEFAULT_CAP = 5200


@dataclass(frozen=True)
class ClassStats:
    label: object
    count: int
    mean: np.ndarray
    var: np.ndarray  # unbiased, ddof=1


@dataclass(frozen=True)
class DpRanking:
    scores: np.ndarray
    order: np.ndarray
    stats: tuple[ClassStats, ClassStats]


@dataclass(frozen=True)
class SubsetSearchResult:
    sizes: np.ndarray
    accuracies: np.ndarray
    chosen_size: int
    selected_indices: np.ndarray


def class_stats(features: np.ndarray, labels) -> tuple[ClassStats, ClassStats]:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise ConfigError("feature matrix must be 2-D")
    if labels.shape[0] != features.shape[0]:
        raise ConfigError("label count does not match matrix rows")
    classes = np.unique(labels)
    if len(classes) != 2:
        raise StatsError(f"need exactly 2 classes, got {len(classes)}")
    out = []
    for cls in classes:
        rows = features[labels == cls]
        if rows.shape[0] < 2:
            raise StatsError(
                f"class {cls!r} has {rows.shape[0]} sample(s); need >= 2"
            )
        out.append(
            ClassStats(
                label=cls,
                count=rows.shape[0],
                mean=rows.mean(axis=0),
                var=rows.var(axis=0, ddof=1),
            )
        )
    return tuple(out)


def dp_scores(features: np.ndarray, labels, formula: str = "welch") -> DpRanking:
    """Score and rank every feature column; see the module docstring."""
    a, b = class_stats(features, labels)
    diff = a.mean - b.mean
    radicand = a.var / a.count + b.var / b.count
    if formula == "welch":
        num = np.abs(diff)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = num / np.sqrt(radicand)
        scores = np.where(radicand > 0, scores, np.where(num == 0, 0.0, np.inf))
    elif formula == "printed":
        printed_radicand = a.var / a.count - b.var / b.count
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = diff / np.sqrt(printed_radicand)
    else:
        raise ConfigError(f"unknown DP formula {formula!r}")

    sort_key = np.where(np.isnan(scores), -np.inf, scores)
    order = np.argsort(-sort_key, kind="stable")
    return DpRanking(scores=scores, order=order, stats=(a, b))


def incremental_select(
    features: np.ndarray,
    labels,
    ranking: DpRanking,
    evaluator,
    cap: int | None = None,
) -> SubsetSearchResult:
    """Evaluate ranking prefixes of sizes 5..cap and keep the best one.

    ``evaluator(indices) -> accuracy percent`` must be deterministic for a
    fixed seed.  Ties on accuracy resolve to the smallest prefix.
    """
    features = np.asarray(features, dtype=np.float64)
    n_features = features.shape[1]
    if n_features < MIN_SUBSET:
        raise SelectionError(
            f"need at least {MIN_SUBSET} features, got {n_features}"
        )
    if cap is None:
        cap = min(n_features, DEFAULT_CAP)
    if not MIN_SUBSET <= cap <= n_features:
        raise ConfigError(
            f"cap must lie in [{MIN_SUBSET}, {n_features}], got {cap}"
        )

    sizes = np.arange(MIN_SUBSET, cap + 1)
    accuracies = np.empty(len(sizes))
    for i, size in enumerate(sizes):
        accuracies[i] = evaluator(ranking.order[:size])

    best = int(np.argmax(accuracies))  # first maximum -> smallest size
    chosen = int(sizes[best])
    return SubsetSearchResult(
        sizes=sizes,
        accuracies=accuracies,
        chosen_size=chosen,
        selected_indices=np.array(ranking.order[:chosen]),
    )


def selection_report(result: SubsetSearchResult, header_lines=()) -> str:
    """Stable text rendering of a subset search (curve plus chosen indices)."""
    lines = list(header_lines)
    lines.append("subset_size,accuracy_percent")
    for size, acc in zip(result.sizes, result.accuracies):
        lines.append(f"{int(size)},{acc:.6f}")
    lines.append(f"chosen_size: {result.chosen_size}")
    lines.append(
        "selected_indices: " + ",".join(str(int(i)) for i in result.selected_indices)
    )
    return "\n".join(lines) + "\n"
