"""Confidence ranking and rank-threshold subset selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadFraction, ParseError


@dataclass(frozen=True)
class RankedPrediction:
    item_id: str
    predicted_class: str
    confidence: float

    def __post_init__(self):
        if not np.isfinite(self.confidence):
            raise ParseError(f"{self.item_id}: non-finite confidence")


def rank_items(predictions: list[RankedPrediction]) -> list[RankedPrediction]:
    """Descending by confidence; ties broken by item_id so ordering is stable."""
    return sorted(predictions, key=lambda p: (-p.confidence, p.item_id))


def select_top_fraction(ranked: list[RankedPrediction], fraction: float
                        ) -> tuple[list[RankedPrediction], list[RankedPrediction]]:
    """Split a ranked list at ceil(fraction * n).

    Non-empty input always yields a non-empty confident part.
    """
    if not 0.0 < fraction <= 1.0:
        raise BadFraction(f"fraction must be in (0, 1], got {fraction}")
    cut = math.ceil(fraction * len(ranked))
    return list(ranked[:cut]), list(ranked[cut:])
