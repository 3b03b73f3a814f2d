"""Per-frame embedding aggregation into a single track descriptor."""

from __future__ import annotations

import math

import numpy as np

from .errors import DimMismatch, EmptyTrack, ZeroVector


def pool_track(frame_vectors: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Sum-pool frame vectors and L2-normalize the result.

    Exactly order-invariant: each dimension is summed with math.fsum, which
    returns the correctly rounded sum regardless of frame order. The result
    always has unit norm. An all-zero sum is an error (a zero descriptor
    would score 0 against every class downstream).
    """
    frames = np.asarray(frame_vectors, dtype=np.float64)
    if frames.size == 0 or frames.shape[0] == 0:
        raise EmptyTrack("no frame vectors to pool")
    if frames.ndim != 2:
        raise DimMismatch(f"expected frames x dim matrix, got shape {frames.shape}")
    total = np.array([math.fsum(col) for col in frames.T])
    norm = np.linalg.norm(total)
    if norm == 0.0:
        raise ZeroVector("frame vectors sum to the zero vector")
    return total / norm
