"""Confusion counts, classification metrics and model comparison tables."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

FORMAT_VERSION = 1
METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def _binary(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionMatrix:
    """Counts with class 1 as the positive class."""
    p = _binary(predictions, "predictions")
    y = _binary(labels, "labels")
    if p.size != y.size:
        raise ValueError(f"{p.size} predictions but {y.size} labels")
    if p.size == 0:
        raise ValueError("need at least one prediction")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
        tn=int(np.sum((p == 0) & (y == 0))),
    )


def _ratio(num, den):
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, precision, recall and F1; any zero denominator yields 0."""
    if cm.total == 0:
        raise ValueError("cannot compute metrics of an empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    return MetricsReport(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
    )


def f1_score(precision: float, recall: float) -> float:
    return _ratio(2 * precision * recall, precision + recall)


def evaluate(predictions, labels) -> MetricsReport:
    return metrics(confusion(predictions, labels))


def rank_models(results: Mapping[str, MetricsReport]) -> list[tuple[str, MetricsReport]]:
    """Descending F1, ties broken by model name."""
    return sorted(results.items(), key=lambda kv: (-kv[1].f1, kv[0]))


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[tuple[str, MetricsReport], ...]

    def to_dict(self) -> dict:
        # Insertion order carries the ranking.
        return {name: m.to_dict() for name, m in self.rows}

    def to_json(self) -> str:
        return json.dumps({"format_version": FORMAT_VERSION, "models": self.to_dict()}, indent=2)

    def to_text(self, digits: int = 4) -> str:
        name_w = max([len("model")] + [len(name) for name, _ in self.rows])
        col_w = max(digits + 2, max(len(n) for n in METRIC_NAMES))
        header = "model".ljust(name_w) + "".join("  " + n.rjust(col_w) for n in METRIC_NAMES)
        lines = [header, "-" * len(header)]
        for name, m in self.rows:
            cells = "".join("  " + f"{getattr(m, n):.{digits}f}".rjust(col_w) for n in METRIC_NAMES)
            lines.append(name.ljust(name_w) + cells)
        return "\n".join(lines)


def compare_models(results: Mapping[str, MetricsReport]) -> ComparisonTable:
    if not results:
        raise ValueError("need at least one model to compare")
    return ComparisonTable(tuple(rank_models(results)))
