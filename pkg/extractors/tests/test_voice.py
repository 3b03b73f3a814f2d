import wave

import numpy as np
import pytest

from castid_extractors.models import ModelLoadError
from castid_extractors.voice import UnreadableAudio, VoiceJob, extract_voice_embeddings
from extractor_helpers import make_wav
from extractor_helpers import parse


def run(source, out, **kw):
    count = extract_voice_embeddings(VoiceJob(source=source, out_path=out, **kw))
    _, _, dim, records = parse(out.read_bytes())
    return count, dim, records


def test_three_segments(tmp_path):
    d = tmp_path / "segs"
    d.mkdir()
    for i, freq in enumerate((220.0, 440.0, 880.0)):
        make_wav(d / f"seg{i}.wav", freq=freq)
    count, dim, records = run(d, tmp_path / "v.cmeb")
    assert count == 3
    assert dim == 1024
    assert [r[0] for r in records] == ["seg0", "seg1", "seg2"]


def test_different_tones_differ(tmp_path):
    d = tmp_path / "segs"
    d.mkdir()
    make_wav(d / "a.wav", freq=300.0)
    make_wav(d / "b.wav", freq=3000.0)
    _, _, records = run(d, tmp_path / "v.cmeb")
    assert not np.allclose(records[0][1], records[1][1])


def test_whole_segment_pooling_duration_independent_dim(tmp_path):
    d = tmp_path / "segs"
    d.mkdir()
    make_wav(d / "short.wav", duration=0.1)
    make_wav(d / "long.wav", duration=2.0)
    _, dim, records = run(d, tmp_path / "v.cmeb")
    assert dim == 1024 and len(records) == 2


def test_list_file_source(tmp_path):
    d = tmp_path / "segs"
    d.mkdir()
    make_wav(d / "x.wav")
    listing = tmp_path / "wavs.txt"
    listing.write_text("segs/x.wav\n")
    count, _, records = run(listing, tmp_path / "v.cmeb")
    assert count == 1 and records[0][0] == "x"


def test_stereo_rejected(tmp_path):
    d = tmp_path / "segs"
    d.mkdir()
    path = d / "st.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(b"\x00\x00" * 3200)
    with pytest.raises(UnreadableAudio):
        run(d, tmp_path / "v.cmeb")


def test_unknown_model(tmp_path):
    d = tmp_path / "segs"
    d.mkdir()
    with pytest.raises(ModelLoadError):
        run(d, tmp_path / "v.cmeb", model="voxnet-nonexistent")
