"""Spectrogram front end for speech segments.

25 ms periodic Hamming window, 10 ms hop, 1024-point FFT. The DC bin is
dropped so each frame carries exactly 512 magnitude bins; output bin k
covers frequency (k+1) * sample_rate / 1024.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, TooShort

WINDOW_S = 0.025
HOP_S = 0.010
FFT_SIZE = 1024
N_BINS = 512


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ParseError("sample_rate must be positive")
        if self.samples.size and not np.isfinite(self.samples).all():
            raise ParseError("audio samples must be finite")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class Spectrogram:
    values: np.ndarray  # 512 x frames, non-negative magnitudes
    sample_rate: int

    @property
    def frames(self) -> int:
        return self.values.shape[1]


def frames_for_duration(seconds: float, sample_rate: int = 16000) -> int:
    """floor((n_samples - window)/hop) + 1 for a clip of the given length."""
    if seconds < WINDOW_S:
        raise TooShort(f"clip of {seconds}s shorter than one {WINDOW_S}s window")
    win = round(WINDOW_S * sample_rate)
    hop = round(HOP_S * sample_rate)
    return int(np.floor((seconds * sample_rate - win) / hop)) + 1


def _hamming_periodic(width: int) -> np.ndarray:
    n = np.arange(width)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / width)


def compute_spectrogram(clip: AudioClip) -> Spectrogram:
    """Magnitude spectrogram, 512 x N, zero-padded 1024-point FFT per frame."""
    sr = clip.sample_rate
    win = round(WINDOW_S * sr)
    hop = round(HOP_S * sr)
    if len(clip.samples) < win:
        raise TooShort(
            f"clip of {len(clip.samples)} samples shorter than one window ({win})")
    n_frames = (len(clip.samples) - win) // hop + 1
    window = _hamming_periodic(win)
    starts = np.arange(n_frames) * hop
    frames = clip.samples[starts[:, None] + np.arange(win)] * window
    spectrum = np.fft.rfft(frames, n=FFT_SIZE, axis=1)
    mags = np.abs(spectrum[:, 1:N_BINS + 1]).T  # drop DC, keep bins 1..512
    return Spectrogram(values=mags, sample_rate=sr)
