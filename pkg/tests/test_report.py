"""Frequency reports, mIoU/accuracy, CSV emission."""

import csv
import math

import numpy as np
import pytest

from annotator.errors import IntegrityError, UsageError
from annotator.journal import JournalEntry
from annotator.lidar_io import LabelSet
from annotator.report import (
    CurvePoint,
    class_frequencies,
    compute_accuracy,
    compute_miou,
    confusion_matrix,
    emit_report,
)


def entry(scan, coord, labels):
    return JournalEntry(
        scan_id=scan,
        round_index=1,
        coord=coord,
        strategy="vcd",
        score=0.0,
        point_indices=tuple(range(len(labels))),
        revealed_labels=tuple(labels),
    )


def base(scan_labels, k):
    return {s: LabelSet(labels=np.asarray(v, dtype=np.int32), class_count=k) for s, v in scan_labels.items()}


def test_class_frequencies_counts_shares():
    entries = [entry("s", (0, 0, 0), [1, 1, 2])]
    report = class_frequencies(entries, base({"s": [1, 1, 2, 2, 2, 0]}, 2))
    by_id = {c.class_id: c for c in report.classes}
    assert by_id[1].selected_count == 2
    assert abs(by_id[1].selected_share - 2 / 3) < 1e-12
    assert abs(by_id[2].selected_share - 1 / 3) < 1e-12
    # ignore id 0 excluded from the base too: base shares are 2/5 and 3/5
    assert abs(by_id[1].base_share - 2 / 5) < 1e-12
    assert abs(by_id[1].lift - (2 / 3) / (2 / 5)) < 1e-12
    assert not report.empty


def test_class_frequencies_empty_journal_flagged():
    report = class_frequencies([], base({"s": [1, 2]}, 2))
    assert report.empty
    assert all(c.selected_count == 0 for c in report.classes)


def test_class_frequencies_dangling_scan():
    with pytest.raises(IntegrityError):
        class_frequencies([entry("ghost", (0, 0, 0), [1])], base({"s": [1]}, 1))


def test_class_frequencies_conservation():
    rng = np.random.default_rng(0)
    entries = []
    total = 0
    for i in range(10):
        labels = rng.integers(0, 5, size=rng.integers(1, 9)).tolist()
        entries.append(entry("s", (i, 0, 0), labels))
        total += len(labels)
    report = class_frequencies(entries, base({"s": rng.integers(0, 5, 50).tolist()}, 4))
    ignored = sum(1 for e in entries for v in e.revealed_labels if v == 0)
    assert sum(c.selected_count for c in report.classes) == total - ignored
    if not report.empty:
        assert abs(sum(c.selected_share for c in report.classes) - 1.0) < 1e-9


def test_infinite_lift_flagged():
    entries = [entry("s", (0, 0, 0), [2])]
    report = class_frequencies(entries, base({"s": [1, 1]}, 2))
    by_id = {c.class_id: c for c in report.classes}
    assert by_id[2].infinite_lift
    assert math.isinf(by_id[2].lift)
    assert by_id[2].base_share == 0.0


# -- mIoU ---------------------------------------------------------------------


def test_miou_identity_is_one():
    truth = LabelSet(labels=np.array([1, 2, 3, 1, 2, 3]), class_count=3)
    ious, mean = compute_miou(truth.labels.copy(), truth)
    np.testing.assert_allclose(ious, 1.0)
    assert mean == 1.0


def test_miou_disjoint_class_is_zero():
    truth = LabelSet(labels=np.array([1, 1, 2, 2]), class_count=2)
    pred = np.array([2, 2, 1, 1])
    ious, mean = compute_miou(pred, truth)
    np.testing.assert_allclose(ious, 0.0)
    assert mean == 0.0


def test_miou_ignores_zero_truth_positions():
    truth = LabelSet(labels=np.array([0, 1, 1]), class_count=2)
    pred = np.array([2, 1, 1])  # position 0 must not count at all
    ious, mean = compute_miou(pred, truth)
    assert ious[0] == 1.0
    assert np.isnan(ious[1])  # class 2 absent from truth and (counted) pred
    assert mean == 1.0


def test_miou_absent_classes_excluded_from_mean():
    truth = LabelSet(labels=np.array([1, 1, 2]), class_count=5)
    pred = np.array([1, 2, 2])
    ious, mean = compute_miou(pred, truth)
    assert np.isnan(ious[2:]).all()
    expected = np.nanmean([0.5, 0.5])
    assert abs(mean - expected) < 1e-12


def test_miou_matches_bruteforce_confusion():
    rng = np.random.default_rng(1)
    k = 10
    for _ in range(20):
        n = int(rng.integers(5, 200))
        truth = rng.integers(0, k + 1, n)
        pred = rng.integers(1, k + 1, n)
        ious, mean = compute_miou(pred, truth, class_count=k)
        # brute force: per-class triple counting, ignoring truth==0 positions
        ref = []
        for c in range(1, k + 1):
            tp = fp = fn = 0
            for p, t in zip(pred, truth):
                if t == 0:
                    continue
                tp += p == c and t == c
                fp += p == c and t != c
                fn += p != c and t == c
            ref.append(tp / (tp + fp + fn) if tp + fp + fn else np.nan)
        np.testing.assert_allclose(ious, ref, atol=1e-12, equal_nan=True)
        if not np.isnan(ref).all():
            assert abs(mean - np.nanmean(ref)) < 1e-12


def test_miou_length_mismatch():
    with pytest.raises(UsageError):
        compute_miou(np.array([1, 2]), np.array([1]), class_count=2)


def test_accuracy_skips_ignore():
    truth = LabelSet(labels=np.array([0, 1, 2, 2]), class_count=2)
    pred = np.array([1, 1, 2, 1])
    assert abs(compute_accuracy(pred, truth) - 2 / 3) < 1e-12


def test_confusion_matrix_shape():
    cm = confusion_matrix(np.array([1, 2, 2]), np.array([1, 2, 1]), class_count=2)
    assert cm.shape == (3, 3)
    assert cm[1, 1] == 1 and cm[2, 2] == 1 and cm[1, 2] == 1


# -- emission -------------------------------------------------------------------


def _report_pieces():
    entries = [entry("s", (0, 0, 0), [1, 1, 2]), entry("s", (1, 0, 0), [2, 3])]
    freq = class_frequencies(entries, base({"s": [1, 1, 2, 2, 3, 3]}, 3))
    curve = [
        CurvePoint(round_index=1, budget=3, metric="accuracy", value=0.5),
        CurvePoint(round_index=1, budget=3, metric="miou", value=0.25),
        CurvePoint(round_index=2, budget=5, metric="accuracy", value=0.75),
        CurvePoint(round_index=2, budget=5, metric="miou", value=1 / 3),
    ]
    summary = {"mode": "al", "rounds": 2}
    return freq, curve, summary


def test_emit_report_deterministic_bytes(tmp_path):
    freq, curve, summary = _report_pieces()
    a = emit_report(tmp_path / "a", freq, curve, summary)
    b = emit_report(tmp_path / "b", freq, curve, summary)
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_emitted_curve_has_one_row_per_round_metric(tmp_path):
    freq, curve, summary = _report_pieces()
    paths = emit_report(tmp_path, freq, curve, summary)
    with open(paths["curve"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {r["metric"] for r in rows} == {"accuracy", "miou"}
    assert [r["round"] for r in rows if r["metric"] == "accuracy"] == ["1", "2"]


def test_emitted_shares_reparse_to_one(tmp_path):
    freq, curve, summary = _report_pieces()
    paths = emit_report(tmp_path, freq, curve, summary)
    with open(paths["frequencies"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0].keys() == {
        "class_id",
        "name",
        "selected_count",
        "selected_share",
        "base_share",
        "lift",
    }
    assert abs(sum(float(r["selected_share"]) for r in rows) - 1.0) < 1e-9
    assert abs(sum(float(r["base_share"]) for r in rows) - 1.0) < 1e-9


def test_emit_rejects_nonmonotone_budget(tmp_path):
    freq, _, summary = _report_pieces()
    bad_curve = [
        CurvePoint(round_index=1, budget=5, metric="accuracy", value=0.5),
        CurvePoint(round_index=2, budget=5, metric="accuracy", value=0.6),
    ]
    with pytest.raises(IntegrityError):
        emit_report(tmp_path, freq, bad_curve, summary)
