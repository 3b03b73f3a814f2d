import numpy as np
import pytest

from castid import errors
from castid.asv import gate_speaking_tracks, median_filter, write_segment_manifest
from castid.ingest import TrackRecord


def track(tid, n_frames, scores):
    v = np.zeros(4)
    v[0] = 1.0
    return TrackRecord(track_id=tid, n_frames=n_frames, internal_descriptor=v,
                       context_descriptor=v, asv_scores=tuple(scores))


class TestMedianFilter:
    def test_window_one_is_identity(self):
        assert median_filter([3.0, 1.0, 2.0], 1) == [3.0, 1.0, 2.0]

    def test_spike_removed(self):
        # clamped windows {0,0,10},{0,10,0},{10,0,0} all have median 0
        assert median_filter([0.0, 10.0, 0.0], 3) == [0.0, 0.0, 0.0]

    def test_constant_unchanged(self):
        assert median_filter([0.7] * 5, 3) == [0.7] * 5

    def test_even_window_rejected(self):
        with pytest.raises(errors.EvenWindow):
            median_filter([1.0], 2)

    def test_idempotent_on_long_runs(self):
        signal = [0.0] * 5 + [1.0] * 5
        once = median_filter(signal, 3)
        assert median_filter(once, 3) == once


class TestGate:
    def test_short_track_discarded(self):
        tracks = [track("t", 49, [1.0] * 49)]
        assert gate_speaking_tracks(tracks) == []

    def test_speaking_track_emits_segment(self):
        tracks = [track("t", 60, [0.9] * 60)]
        segments = gate_speaking_tracks(tracks, fps=25.0, speak_threshold=0.5)
        assert len(segments) == 1
        assert segments[0].duration_s == pytest.approx(2.4)
        assert segments[0].track_id == "t"

    def test_one_low_filtered_score_rejects(self):
        # a long dip survives the median filter and breaks the gate
        scores = [0.9] * 25 + [0.1] * 10 + [0.9] * 25
        assert gate_speaking_tracks([track("t", 60, scores)]) == []

    def test_missing_scores_error(self):
        v = np.zeros(4)
        v[0] = 1.0
        bad = TrackRecord(track_id="t", n_frames=60, internal_descriptor=v,
                          context_descriptor=v)
        with pytest.raises(errors.MissingAsvScores):
            gate_speaking_tracks([bad])

    def test_at_most_one_segment_per_track(self):
        tracks = [track(f"t{i}", 60, [0.9] * 60) for i in range(4)]
        segments = gate_speaking_tracks(tracks)
        assert len(segments) == 4
        assert len({s.track_id for s in segments}) == 4

    def test_raising_threshold_never_adds_segments(self):
        rng = np.random.default_rng(0)
        tracks = [track(f"t{i}", 60, rng.random(60)) for i in range(20)]
        kept = [len(gate_speaking_tracks(tracks, speak_threshold=t))
                for t in (0.1, 0.3, 0.5, 0.7)]
        assert kept == sorted(kept, reverse=True)


def test_segment_manifest_csv(tmp_path):
    segments = gate_speaking_tracks([track("t", 60, [0.9] * 60)])
    path = tmp_path / "segments.csv"
    write_segment_manifest(segments, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "segment_id,track_id,duration_s"
    assert lines[1].startswith("t/seg0,t,2.4")
