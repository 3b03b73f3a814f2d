"""Metrics over final label assignments: accuracy, PR curve, AP, per-character.

Recall here means coverage: the fraction of all ground-truth tracks still
predicted after applying a refuse-to-predict confidence threshold. The PR
curve sweeps the distinct confidence values descending; AP is the area
under that stepwise curve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import EmptyCurve, MissingPrediction


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    average_precision: float
    pr_points: tuple[tuple[float, float], ...]          # (recall, precision)
    per_character: dict[str, tuple[int, float]]          # character -> (n, acc)

    def to_json(self) -> str:
        return json.dumps({
            "accuracy": self.accuracy,
            "average_precision": self.average_precision,
            "pr_points": [list(p) for p in self.pr_points],
            "per_character": {c: {"n_tracks": n, "accuracy": a}
                              for c, (n, a) in self.per_character.items()},
        }, indent=2)


def _check_coverage(labels: dict[str, str], gt: dict[str, str]) -> None:
    missing = sorted(set(gt) - set(labels))
    if missing:
        raise MissingPrediction(f"no prediction for tracks {missing[:5]}"
                                f"{'...' if len(missing) > 5 else ''}")


def accuracy(labels: dict[str, str], gt: dict[str, str]) -> float:
    """Fraction of ground-truth tracks predicted correctly."""
    _check_coverage(labels, gt)
    if not gt:
        raise MissingPrediction("empty ground truth")
    return sum(1 for t, c in gt.items() if labels[t] == c) / len(gt)


def pr_curve(labels: dict[str, tuple[str, float]], gt: dict[str, str]
             ) -> list[tuple[float, float]]:
    """One (recall, precision) point per distinct confidence threshold.

    labels maps track_id -> (predicted character, confidence). At threshold
    t the predicted set is every track with confidence >= t, so confidence
    ties enter or leave together.
    """
    _check_coverage(labels, gt)
    n_total = len(gt)
    if n_total == 0:
        raise MissingPrediction("empty ground truth")
    thresholds = sorted({conf for _, conf in labels.values()}, reverse=True)
    points = []
    for t in thresholds:
        kept = [tid for tid in gt if labels[tid][1] >= t]
        correct = sum(1 for tid in kept if labels[tid][0] == gt[tid])
        points.append((len(kept) / n_total, correct / len(kept)))
    return points


def average_precision(pr: list[tuple[float, float]]) -> float:
    """Area under the stepwise PR curve: sum (r_i - r_{i-1}) * p_i."""
    if not pr:
        raise EmptyCurve("empty PR curve")
    total = 0.0
    prev_r = 0.0
    for r, p in pr:
        total += (r - prev_r) * p
        prev_r = r
    return total


def per_character_report(labels: dict[str, str], gt: dict[str, str]
                         ) -> dict[str, tuple[int, float]]:
    _check_coverage(labels, gt)
    out: dict[str, tuple[int, float]] = {}
    for character in sorted(set(gt.values())):
        tids = [t for t, c in gt.items() if c == character]
        hits = sum(1 for t in tids if labels[t] == character)
        out[character] = (len(tids), hits / len(tids))
    return out


def evaluate(labels: dict[str, tuple[str, float]], gt: dict[str, str]) -> EvalReport:
    flat = {t: c for t, (c, _) in labels.items()}
    pr = pr_curve(labels, gt)
    return EvalReport(
        accuracy=accuracy(flat, gt),
        average_precision=average_precision(pr),
        pr_points=tuple(pr),
        per_character=per_character_report(flat, gt),
    )
