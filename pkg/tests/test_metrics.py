import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phishdqn.errors import EmptyInput, LengthMismatch
from phishdqn.metrics import (
    PUBLISHED_MEASURES,
    ConfusionMatrix,
    confusion,
    evaluate,
    format_table,
    mean_report,
    report,
    side_by_side,
)


def test_confusion_cells():
    assert confusion([1, 0, 1, 0], [1, 0, 0, 1]) == ConfusionMatrix(tp=1, tn=1, fp=1, fn=1)
    m = confusion([1, 1, 0], [1, 1, 0])
    assert m.fp == 0 and m.fn == 0
    m = confusion([0, 0, 1], [1, 1, 0])
    assert m.tp == 0 and m.tn == 0


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        confusion([1], [1, 0])
    with pytest.raises(EmptyInput):
        confusion([], [])


def test_report_formulas():
    r = report(ConfusionMatrix(tp=3, tn=5, fp=1, fn=1))
    assert (r.precision, r.recall, r.accuracy, r.f_score) == pytest.approx((0.75, 0.75, 0.8, 0.75))


def test_undefined_marker():
    r = report(ConfusionMatrix(tp=0, tn=4, fp=0, fn=2))
    assert r.precision is None and r.f_score is None and r.recall == 0.0
    assert json.loads(r.to_json())["precision"] is None
    r = report(ConfusionMatrix(tp=0, tn=4, fp=0, fn=0))
    assert r.recall is None


def test_published_row_reconstructs():
    # smallest integer 4-tuple whose measures round to the published row, found by brute-force search
    r = report(ConfusionMatrix(tp=117, tn=191, fp=18, fn=16))
    got = {k: round(getattr(r, k), 3) for k in PUBLISHED_MEASURES}
    assert got == PUBLISHED_MEASURES


def brute_force(preds, labels):
    cells = {(p, y): 0 for p, y in itertools.product((0, 1), repeat=2)}
    for p, y in zip(preds, labels):
        cells[(p, y)] += 1
    tp, tn, fp, fn = cells[(1, 1)], cells[(0, 0)], cells[(1, 0)], cells[(0, 1)]
    prec = tp / (tp + fp) if tp + fp else None
    rec = tp / (tp + fn) if tp + fn else None
    f = 2 * prec * rec / (prec + rec) if prec is not None and rec is not None and prec + rec else None
    return tp, tn, fp, fn, prec, rec, (tp + tn) / len(labels), f


pairs = st.integers(1, 60).flatmap(lambda n: st.tuples(st.lists(st.integers(0, 1), min_size=n, max_size=n), st.lists(st.integers(0, 1), min_size=n, max_size=n)))


@given(pairs)
def test_matches_brute_force(pair):
    preds, labels = pair
    r = evaluate(preds, labels)
    m = r.matrix
    assert (m.tp, m.tn, m.fp, m.fn, r.precision, r.recall, r.accuracy, r.f_score) == pytest.approx(brute_force(preds, labels))


@given(pairs)
def test_polarity_swap_and_f_bounds(pair):
    preds, labels = pair
    a = evaluate(preds, labels).matrix
    b = evaluate([1 - p for p in preds], [1 - y for y in labels]).matrix
    assert (a.tp, a.tn, a.fp, a.fn) == (b.tn, b.tp, b.fn, b.fp)
    r = report(a)
    if r.f_score is not None:
        assert min(r.precision, r.recall) - 1e-12 <= r.f_score <= max(r.precision, r.recall) + 1e-12


def test_mean_report_skips_undefined():
    r1 = report(ConfusionMatrix(tp=3, tn=5, fp=1, fn=1))
    r2 = report(ConfusionMatrix(tp=0, tn=4, fp=0, fn=2))
    mean = mean_report([r1, r2])
    assert mean["precision"] == 0.75 and mean["defined_counts"]["precision"] == 1
    assert mean["accuracy"] == pytest.approx((0.8 + 4 / 6) / 2)
    assert mean["tp"] == 3 and mean["fn"] == 3


def test_tables():
    text = side_by_side({"precision": None, "recall": 0.5, "accuracy": 0.75, "f_score": None})
    assert "n/a" in text and "0.867" in text and "F-Measure" in text
    assert len({len(line) for line in format_table({"a": PUBLISHED_MEASURES}).splitlines()}) == 1
