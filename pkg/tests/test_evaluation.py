import itertools

import numpy as np
import pytest

from castid import errors
from castid.evaluation import (
    accuracy,
    average_precision,
    evaluate,
    per_character_report,
    pr_curve,
)


class TestAccuracy:
    def test_all_correct(self):
        gt = {"a": "X", "b": "Y"}
        assert accuracy(dict(gt), gt) == 1.0

    def test_three_of_four(self):
        gt = {f"t{i}": "X" for i in range(4)}
        labels = dict(gt)
        labels["t3"] = "Y"
        assert accuracy(labels, gt) == 0.75

    def test_matches_recount_oracle(self):
        rng = np.random.default_rng(0)
        gt = {f"t{i}": str(rng.integers(3)) for i in range(50)}
        labels = {t: str(rng.integers(3)) for t in gt}
        expected = sum(labels[t] == gt[t] for t in gt) / 50
        assert accuracy(labels, gt) == expected

    def test_missing_prediction(self):
        with pytest.raises(errors.MissingPrediction):
            accuracy({}, {"a": "X"})


class TestPrCurve:
    def test_all_correct_gives_unit_precision(self):
        gt = {f"t{i}": "X" for i in range(5)}
        labels = {t: ("X", i * 0.1) for i, t in enumerate(gt)}
        for _, p in pr_curve(labels, gt):
            assert p == 1.0

    def test_two_track_hand_case(self):
        gt = {"a": "X", "b": "X"}
        labels = {"a": ("Y", 0.9), "b": ("X", 0.1)}  # confident one is wrong
        assert pr_curve(labels, gt) == [(0.5, 0.0), (1.0, 0.5)]

    def test_single_correct_track(self):
        assert pr_curve({"a": ("X", 0.3)}, {"a": "X"}) == [(1.0, 1.0)]

    def test_precision_at_full_recall_equals_accuracy(self):
        rng = np.random.default_rng(1)
        gt = {f"t{i}": str(rng.integers(3)) for i in range(30)}
        labels = {t: (str(rng.integers(3)), float(rng.random())) for t in gt}
        curve = pr_curve(labels, gt)
        assert curve[-1] == (1.0, accuracy({t: c for t, (c, _) in labels.items()}, gt))

    def test_ties_enter_together(self):
        gt = {"a": "X", "b": "X", "c": "X"}
        labels = {"a": ("X", 0.5), "b": ("Y", 0.5), "c": ("X", 0.1)}
        assert pr_curve(labels, gt)[0] == (2 / 3, 0.5)


class TestAveragePrecision:
    def test_perfect_curve(self):
        assert average_precision([(0.5, 1.0), (1.0, 1.0)]) == 1.0

    def test_hand_case(self):
        assert average_precision([(0.5, 0.0), (1.0, 0.5)]) == 0.25

    def test_empty_curve(self):
        with pytest.raises(errors.EmptyCurve):
            average_precision([])

    def test_exhaustive_enumeration_small_instances(self):
        # oracle: recompute precision/recall at every threshold from scratch
        for n in range(1, 7):
            for correct in itertools.product([True, False], repeat=n):
                gt = {f"t{i}": "X" for i in range(n)}
                labels = {f"t{i}": ("X" if c else "Y", float(n - i))
                          for i, c in enumerate(correct)}
                got = average_precision(pr_curve(labels, gt))
                expected, prev_r = 0.0, 0.0
                for k in range(1, n + 1):  # threshold after k most confident
                    hits = sum(correct[:k])
                    r, p = k / n, hits / k
                    expected += (r - prev_r) * p
                    prev_r = r
                assert got == pytest.approx(expected, abs=1e-12)

    def test_invariant_under_monotone_confidence_transform(self):
        rng = np.random.default_rng(2)
        gt = {f"t{i}": str(rng.integers(3)) for i in range(20)}
        labels = {t: (str(rng.integers(3)), float(rng.random())) for t in gt}
        transformed = {t: (c, 3.0 * conf**3 + 1.0) for t, (c, conf) in labels.items()}
        assert average_precision(pr_curve(labels, gt)) == pytest.approx(
            average_precision(pr_curve(transformed, gt)))


class TestPerCharacter:
    def test_single_character(self):
        gt = {"a": "X", "b": "X"}
        labels = {"a": "X", "b": "Y"}
        report = per_character_report(labels, gt)
        assert report == {"X": (2, 0.5)}

    def test_absent_character_zero_accuracy(self):
        report = per_character_report({"a": "Y"}, {"a": "X"})
        assert report["X"] == (1, 0.0)

    def test_counts_partition(self):
        rng = np.random.default_rng(3)
        gt = {f"t{i}": str(rng.integers(4)) for i in range(40)}
        labels = {t: str(rng.integers(4)) for t in gt}
        report = per_character_report(labels, gt)
        assert sum(n for n, _ in report.values()) == 40


def test_evaluate_report_fields():
    gt = {"a": "X", "b": "X"}
    labels = {"a": ("X", 0.9), "b": ("X", 0.5)}
    report = evaluate(labels, gt)
    assert report.accuracy == 1.0
    assert report.average_precision == 1.0
    recalls = [r for r, _ in report.pr_points]
    assert recalls == sorted(recalls)
    assert "average_precision" in report.to_json()
