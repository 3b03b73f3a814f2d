"""Embedding backends, selected by model identifier.

Real deployments plug in pretrained CNNs (a VGG-style face net, a deep
speaker net) behind the same two protocols. The built-in backends need no
checkpoint download and are fully deterministic, which keeps the adapters
testable offline:

- face "gray64": BT.601 grayscale, bicubic rescale of the crop to 64x64
  (the rescale target is this adapter's choice), flattened to 4096 values
  in [0, 1].
- voice "specstats": 25 ms / 10 ms Hamming spectrogram, 1024-point FFT
  with the DC bin dropped (512 bins), log-compressed, then per-bin mean
  and standard deviation over the whole segment -> 1024 values.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np
from PIL import Image


class ModelLoadError(Exception):
    pass


class FaceModel(Protocol):
    dim: int

    def embed(self, image: Image.Image) -> np.ndarray: ...


class VoiceModel(Protocol):
    dim: int

    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray: ...


class GrayPatchFaceModel:
    dim = 4096
    _SIZE = 64
    _LUMA = np.array([0.299, 0.587, 0.114])

    def embed(self, image: Image.Image) -> np.ndarray:
        arr = np.asarray(image.convert("RGB"), dtype=np.float64) / 255.0
        gray = arr @ self._LUMA
        small = Image.fromarray((gray * 255.0).astype(np.uint8), "L").resize(
            (self._SIZE, self._SIZE), Image.BICUBIC)
        return (np.asarray(small, dtype=np.float64) / 255.0).ravel()


class SpectrogramStatsVoiceModel:
    dim = 1024
    _WINDOW_S = 0.025
    _HOP_S = 0.010
    _FFT = 1024
    _BINS = 512

    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        win = round(self._WINDOW_S * sample_rate)
        hop = round(self._HOP_S * sample_rate)
        if len(samples) < win:
            raise ValueError(f"segment shorter than one {win}-sample window")
        n_frames = (len(samples) - win) // hop + 1
        n = np.arange(win)
        window = 0.54 - 0.46 * np.cos(2.0 * np.pi * n / win)
        starts = np.arange(n_frames) * hop
        frames = samples[starts[:, None] + n] * window
        spectrum = np.fft.rfft(frames, n=self._FFT, axis=1)
        mags = np.log1p(np.abs(spectrum[:, 1:self._BINS + 1]))
        # whole-segment pooling: one vector regardless of duration
        return np.concatenate([mags.mean(axis=0), mags.std(axis=0)])


_FACE_MODELS = {"gray64": GrayPatchFaceModel}
_VOICE_MODELS = {"specstats": SpectrogramStatsVoiceModel}


def load_face_model(name: str) -> FaceModel:
    try:
        return _FACE_MODELS[name]()
    except KeyError:
        raise ModelLoadError(
            f"unknown face model {name!r}; have {sorted(_FACE_MODELS)}") from None


def load_voice_model(name: str) -> VoiceModel:
    try:
        return _VOICE_MODELS[name]()
    except KeyError:
        raise ModelLoadError(
            f"unknown voice model {name!r}; have {sorted(_VOICE_MODELS)}") from None
