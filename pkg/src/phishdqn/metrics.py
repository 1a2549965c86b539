"""Confusion matrix and relevance measures. Phishing (label 1) is the positive class."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInput, LengthMismatch

MEASURES = ("precision", "recall", "accuracy", "f_score")

# Published relevance measures of the reference DQN phishing classifier.
PUBLISHED_MEASURES = {"precision": 0.867, "recall": 0.88, "accuracy": 0.901, "f_score": 0.873}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class RelevanceReport:
    """Measures are None when their denominator is zero."""

    precision: float | None
    recall: float | None
    accuracy: float | None
    f_score: float | None
    matrix: ConfusionMatrix

    def to_dict(self) -> dict:
        m = self.matrix
        return {
            "tp": m.tp,
            "tn": m.tn,
            "fp": m.fp,
            "fn": m.fn,
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
            "f_score": self.f_score,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionMatrix:
    predictions, labels = list(predictions), list(labels)
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    if not labels:
        raise EmptyInput("no predictions to score")
    tp = tn = fp = fn = 0
    for p, y in zip(predictions, labels):
        p, y = int(p), int(y)
        if p not in (0, 1) or y not in (0, 1):
            raise ValueError(f"predictions and labels must be 0/1, got {p}, {y}")
        if p and y:
            tp += 1
        elif p:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


def _ratio(num: float, den: float) -> float | None:
    return num / den if den else None


def report(m: ConfusionMatrix) -> RelevanceReport:
    if m.total <= 0:
        raise EmptyInput("confusion matrix is empty")
    precision = _ratio(m.tp, m.tp + m.fp)
    recall = _ratio(m.tp, m.tp + m.fn)
    accuracy = (m.tp + m.tn) / m.total
    f_score = None
    if precision is not None and recall is not None:
        f_score = _ratio(2 * precision * recall, precision + recall)
    return RelevanceReport(precision, recall, accuracy, f_score, m)


def evaluate(predictions: Sequence[int], labels: Sequence[int]) -> RelevanceReport:
    return report(confusion(predictions, labels))


def mean_report(reports: Sequence[RelevanceReport]) -> dict:
    """Field-wise arithmetic mean; undefined entries are left out and counted.

    Confusion counts are summed across reports.
    """
    if not reports:
        raise EmptyInput("no reports to average")
    out = {k: sum(getattr(r.matrix, k) for r in reports) for k in ("tp", "tn", "fp", "fn")}
    counts = {}
    for name in MEASURES:
        defined = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        out[name] = sum(defined) / len(defined) if defined else None
        counts[name] = len(defined)
    out["defined_counts"] = counts
    return out


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.3f}"


def format_table(rows: dict[str, dict]) -> str:
    """Plain-text table laid out like the published results row.

    ``rows`` maps a row label to a dict holding the four measures.
    """
    header = ["", "Precision", "Recall", "Accuracy", "F-Measure"]
    body = [[label] + [_fmt(vals.get(k)) for k in MEASURES] for label, vals in rows.items()]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    line = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    render = lambda r: "| " + " | ".join(c.rjust(w) for c, w in zip(r, widths)) + " |"
    return "\n".join([line, render(header), line, *map(render, body), line])


def side_by_side(measured: dict) -> str:
    return format_table({"measured": measured, "published": PUBLISHED_MEASURES})
