"""Active-speaker gating: per-frame scores -> per-track speech segments.

A track yields at most one segment, and only when it is long enough
(>= min_frames) and its median-filtered score stays at or above the
speaking threshold for the entire track.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EvenWindow, MissingAsvScores, ParseError
from .ingest import TrackRecord


@dataclass(frozen=True)
class SpeechSegment:
    segment_id: str
    track_id: str
    duration_s: float
    descriptor: np.ndarray | None = None
    label_state: str = "unlabeled"

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ParseError(f"segment {self.segment_id}: non-positive duration")


def segment_id_for(track_id: str) -> str:
    """One segment per track; ids are derived so files can cross-reference."""
    return f"{track_id}/seg0"


def median_filter(scores: list[float] | np.ndarray, window: int) -> list[float]:
    """1-D median filter with clamped (edge-replicated) borders."""
    if window < 1 or window % 2 == 0:
        raise EvenWindow(f"window must be odd and positive, got {window}")
    arr = np.asarray(scores, dtype=np.float64)
    if window == 1 or arr.size == 0:
        return arr.tolist()
    half = window // 2
    padded = np.pad(arr, half, mode="edge")
    stacked = np.lib.stride_tricks.sliding_window_view(padded, window)
    return np.median(stacked, axis=1).tolist()


def gate_speaking_tracks(tracks: list[TrackRecord], fps: float = 25.0,
                         min_frames: int = 50, speak_threshold: float = 0.5,
                         window: int = 9) -> list[SpeechSegment]:
    """Emit a segment per track that is long enough and speaks throughout."""
    segments = []
    for t in tracks:
        if t.asv_scores is None:
            raise MissingAsvScores(f"track {t.track_id} has no ASV scores")
        if t.n_frames < min_frames:
            continue
        filtered = median_filter(list(t.asv_scores), window)
        if all(s >= speak_threshold for s in filtered):
            segments.append(SpeechSegment(
                segment_id=segment_id_for(t.track_id),
                track_id=t.track_id,
                duration_s=t.n_frames / fps,
            ))
    return segments


def write_segment_manifest(segments: list[SpeechSegment], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["segment_id", "track_id", "duration_s"])
        for s in segments:
            writer.writerow([s.segment_id, s.track_id, f"{s.duration_s:.6f}"])
