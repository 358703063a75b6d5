"""Confusion matrices, the four headline metrics and a model comparison table.

Binary mode scores the positive class (label id 1, "violent", by default).
Macro mode averages per-class precision, recall and F1 without weights.
A ratio with a zero denominator is reported as 0.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus

log = logging.getLogger(__name__)

COLUMNS = ("accuracy", "precision", "recall", "f1")
HEADERS = ("Acc", "Pre", "Recall", "F1_score")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (gold, predicted)

    @property
    def n_labels(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def binary(self, positive: int = 1) -> tuple[int, int, int, int]:
        """``(TP, FP, FN, TN)`` with ``positive`` as the positive class."""
        m = self.counts
        tp = int(m[positive, positive])
        fp = int(m[:, positive].sum()) - tp
        fn = int(m[positive, :].sum()) - tp
        return tp, fp, fn, self.total - tp - fp - fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: tuple = ()
    mode: str = "binary"

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in COLUMNS}


def confusion(predictions: Sequence[int], gold: Sequence[int], n_labels: int | None = None) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold labels")
    if len(gold) == 0:
        raise ValueError("cannot build a confusion matrix from no items")
    k = n_labels or int(max(predictions.max(), gold.max())) + 1
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (gold, predictions), 1)
    return ConfusionMatrix(counts)


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def _f1(p, r) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def accuracy(matrix: ConfusionMatrix) -> float:
    return _ratio(int(np.trace(matrix.counts)), matrix.total)


def metrics(matrix: ConfusionMatrix, positive: int | str = 1) -> MetricsReport:
    """Accuracy, precision, recall and F1.

    ``positive`` is a label id for binary-style scoring, or ``"macro"``.
    """
    per_class = []
    for c in range(matrix.n_labels):
        tp, fp, fn, _ = matrix.binary(c)
        p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        per_class.append({"label": c, "precision": p, "recall": r, "f1": _f1(p, r)})
    acc = accuracy(matrix)
    if positive == "macro":
        k = matrix.n_labels
        p = sum(pc["precision"] for pc in per_class) / k
        r = sum(pc["recall"] for pc in per_class) / k
        f = sum(pc["f1"] for pc in per_class) / k
        return MetricsReport(acc, p, r, f, tuple(per_class), "macro")
    pc = per_class[positive]
    return MetricsReport(acc, pc["precision"], pc["recall"], pc["f1"], tuple(per_class), f"binary:{positive}")


def percent(x: float) -> str:
    """``x`` as a percentage with one decimal, rounded half up."""
    return str((Decimal(repr(float(x))) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass
class Row:
    name: str
    report: MetricsReport | None = None
    error: str | None = None


@dataclass
class ComparisonTable:
    rows: list = field(default_factory=list)

    def best(self) -> dict[str, set]:
        ok = [r for r in self.rows if r.report is not None]
        out = {}
        for col in COLUMNS:
            if not ok:
                out[col] = set()
                continue
            top = max(getattr(r.report, col) for r in ok)
            out[col] = {r.name for r in ok if getattr(r.report, col) == top}
        return out

    def to_text(self) -> str:
        best = self.best()
        width = max([len("Model")] + [len(r.name) for r in self.rows])
        lines = ["  ".join([f"{'Model':<{width}}"] + [f"{h + ' (%)':>14}" for h in HEADERS])]
        for r in self.rows:
            if r.report is None:
                lines.append(f"{r.name:<{width}}  FAILED: {r.error}")
                continue
            cells = []
            for col in COLUMNS:
                mark = "*" if r.name in best[col] else " "
                cells.append(f"{percent(getattr(r.report, col)) + mark:>14}")
            lines.append("  ".join([f"{r.name:<{width}}"] + cells))
        lines.append("* best in column")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "acc", "pre", "recall", "f1"])
        for r in self.rows:
            if r.report is not None:
                w.writerow([r.name] + [percent(getattr(r.report, c)) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        best = self.best()
        rows = []
        for r in self.rows:
            if r.report is None:
                rows.append({"model": r.name, "error": r.error})
            else:
                rows.append({"model": r.name, **r.report.as_dict(), "mode": r.report.mode,
                             "best": [c for c in COLUMNS if r.name in best[c]]})
        return json.dumps({"rows": rows}, indent=2) + "\n"

    def render(self, fmt: str = "text") -> str:
        return {"text": self.to_text, "csv": self.to_csv, "json": self.to_json}[fmt]()


def compare(models: Sequence[tuple[str, Callable]], test: Corpus, positive: int | str = 1) -> ComparisonTable:
    """Score each ``(name, predict)`` pair on ``test``.

    ``predict`` maps a :class:`~.corpus.Document` to a label id. A model
    that raises on any document gets an error row; the others are
    unaffected.
    """
    if not models:
        raise ValueError("need at least one model")
    if len(test) == 0:
        raise ValueError("empty test set")
    gold = test.label_ids
    table = ComparisonTable()
    for name, fn in models:
        try:
            preds = [int(fn(doc)) for doc in test]
            m = confusion(preds, gold, len(test.labels))
            table.rows.append(Row(name, metrics(m, positive)))
        except Exception as exc:
            log.warning("model %s failed: %s", name, exc)
            table.rows.append(Row(name, error=f"{type(exc).__name__}: {exc}"))
    return table
