"""Speech-segment embedding extraction.

Input is either a directory of WAV files or a text manifest listing one
WAV path per line. Each file is one speech segment and yields one vector;
ids are the file stems.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cmeb import write_cmeb
from .models import load_voice_model


class UnreadableAudio(Exception):
    pass


@dataclass(frozen=True)
class VoiceJob:
    source: Path                  # directory of WAVs, or a list file
    out_path: Path
    model: str = "specstats"


def _segment_paths(source: Path) -> list[Path]:
    if source.is_dir():
        return sorted(source.glob("*.wav"))
    lines = source.read_text("utf-8").splitlines()
    return [source.parent / line.strip() for line in lines if line.strip()]


def _read_wav(path: Path) -> tuple[np.ndarray, int]:
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2:
                raise UnreadableAudio(f"{path}: need 16-bit mono PCM")
            raw = w.readframes(w.getnframes())
            rate = w.getframerate()
    except (wave.Error, OSError, EOFError) as e:
        raise UnreadableAudio(f"{path}: {e}") from e
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0, rate


def extract_voice_embeddings(job: VoiceJob) -> int:
    """Write one embedding per segment WAV to job.out_path; returns the count."""
    model = load_voice_model(job.model)
    records = []
    for path in _segment_paths(job.source):
        samples, rate = _read_wav(path)
        records.append((path.stem, model.embed(samples, rate)))
    write_cmeb(job.out_path, model.dim, records)
    return len(records)
