"""Linear one-vs-rest SVM trained by dual coordinate descent.

Per class y the primal objective is

    (lambda/2) ||w||^2 + (1/n) sum_i max(0, 1 - s_i (w^T x_i + b))

with s_i = +1 for examples of class y and -1 otherwise. The bias is handled
by augmenting every feature vector with a constant 1.0 (so b is regularized
too). The solver is coordinate ascent on the L1-hinge dual with a fixed
sample permutation drawn once from the seed, which makes training fully
deterministic and guarantees monotone progress: the recorded objective per
epoch is the negative dual, which never increases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    EmptyClass,
    ParseError,
    SingleClass,
    TruncatedFile,
    UnsupportedVersion,
)

CMSV_MAGIC = b"CMSV"
CMSV_VERSION = 1
_CMSV_HEADER = struct.Struct("<4sIII")

DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class TrainConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    epochs: int = 200
    seed: int = 0
    tolerance: float = 1e-6

    def __post_init__(self):
        if not self.lambda_grid or any(l <= 0 for l in self.lambda_grid):
            raise ParseError("lambda_grid must be non-empty and positive")
        if self.epochs < 1:
            raise ParseError("epochs must be >= 1")


@dataclass(frozen=True)
class SvmModel:
    classes: tuple[str, ...]
    weights: np.ndarray   # n_classes x dim, float64
    biases: np.ndarray    # n_classes, float64
    lam: float
    objective_history: tuple[tuple[float, ...], ...] = ()  # per class, per epoch

    def __post_init__(self):
        if self.weights.shape[0] != len(self.classes) or \
                self.biases.shape[0] != len(self.classes):
            raise DimMismatch("weights/biases do not match class count")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ParseError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _solve_binary(X: np.ndarray, s: np.ndarray, lam: float, epochs: int,
                  tol: float, order: np.ndarray) -> tuple[np.ndarray, list[float]]:
    """Dual CD for one binary problem on bias-augmented X. Returns (w, -dual per epoch)."""
    n = X.shape[0]
    C = 1.0 / (lam * n)
    q = np.einsum("ij,ij->i", X, X)
    alpha = np.zeros(n)
    w = np.zeros(X.shape[1])
    history: list[float] = []
    prev = np.inf
    for _ in range(epochs):
        for i in order:
            g = s[i] * float(X[i] @ w) - 1.0
            a_old = alpha[i]
            a_new = min(max(a_old - g / q[i], 0.0), C)
            if a_new != a_old:
                w += (a_new - a_old) * s[i] * X[i]
                alpha[i] = a_new
        neg_dual = 0.5 * float(w @ w) - float(alpha.sum())
        history.append(neg_dual)
        if prev - neg_dual < tol * max(1.0, abs(neg_dual)):
            break
        prev = neg_dual
    return w, history


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def primal_objective(w: np.ndarray, b: float, X: np.ndarray, s: np.ndarray,
                     lam: float) -> float:
    """(lambda/2)||[w;b]||^2 + mean hinge, on raw (unaugmented) X."""
    margins = 1.0 - s * (X @ w + b)
    reg = 0.5 * lam * (float(w @ w) + b * b)
    return reg + float(np.maximum(margins, 0.0).mean())


def _fit(X: np.ndarray, labels: list[str], classes: tuple[str, ...],
         lam: float, config: TrainConfig) -> SvmModel:
    Xa = _augment(X)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(X.shape[0])
    weights = np.empty((len(classes), X.shape[1]))
    biases = np.empty(len(classes))
    histories = []
    label_arr = np.array(labels)
    for k, cls in enumerate(classes):
        s = np.where(label_arr == cls, 1.0, -1.0)
        w, hist = _solve_binary(Xa, s, lam, config.epochs, config.tolerance, order)
        weights[k] = w[:-1]
        biases[k] = w[-1]
        histories.append(tuple(hist))
    return SvmModel(classes=classes, weights=weights, biases=biases, lam=lam,
                    objective_history=tuple(histories))


def train_ovr(examples: list[tuple[np.ndarray, str]],
              config: TrainConfig = TrainConfig(),
              val: list[tuple[np.ndarray, str]] | None = None) -> SvmModel:
    """Train one binary SVM per class.

    With a validation set, lambda is picked from config.lambda_grid by
    validation accuracy (ties go to the smaller lambda); without one the
    smallest grid value is used.
    """
    if not examples:
        raise EmptyClass("no training examples")
    classes = tuple(sorted({c for _, c in examples}))
    if len(classes) < 2:
        raise SingleClass(f"need >= 2 classes, got {classes}")
    dims = {len(x) for x, _ in examples}
    if len(dims) != 1:
        raise DimMismatch(f"inconsistent example dims {sorted(dims)}")
    X = np.asarray([x for x, _ in examples], dtype=np.float64)
    labels = [c for _, c in examples]

    if val is None:
        return _fit(X, labels, classes, min(config.lambda_grid), config)

    best = None
    for lam in sorted(config.lambda_grid):
        model = _fit(X, labels, classes, lam, config)
        hits = sum(1 for x, c in val if predict(model, x)[0] == c)
        acc = hits / len(val) if val else 0.0
        if best is None or acc > best[0]:
            best = (acc, model)
    return best[1]


def score(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """w_y^T x + b_y for every class, in class order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DimMismatch(f"expected dim {model.dim}, got shape {x.shape}")
    return model.weights @ x + model.biases


def score_many(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Scores for a batch, rows x classes."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.dim:
        raise DimMismatch(f"expected dim {model.dim}, got {X.shape[1]}")
    return X @ model.weights.T + model.biases


def predict(model: SvmModel, x: np.ndarray) -> tuple[str, float]:
    """Argmax class and its raw score; exact ties break lexicographically.

    Classes are stored sorted, so the first argmax is the lexicographic winner.
    """
    scores = score(model, x)
    k = int(np.argmax(scores))
    return model.classes[k], float(scores[k])


def save_model(model: SvmModel, path: str | Path) -> None:
    """CMSV binary: per class, name then dim+1 f32 (weights then bias)."""
    parts = [_CMSV_HEADER.pack(CMSV_MAGIC, CMSV_VERSION, len(model.classes),
                               model.dim)]
    for k, cls in enumerate(model.classes):
        encoded = cls.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        row = np.append(model.weights[k], model.biases[k]).astype("<f4")
        parts.append(row.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path: str | Path) -> SvmModel:
    data = Path(path).read_bytes()
    if len(data) < _CMSV_HEADER.size:
        raise TruncatedFile(f"{path}: missing CMSV header")
    magic, version, n_classes, dim = _CMSV_HEADER.unpack_from(data)
    if magic != CMSV_MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != CMSV_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    classes, weights, biases = [], np.empty((n_classes, dim)), np.empty(n_classes)
    offset = _CMSV_HEADER.size
    for k in range(n_classes):
        if offset + 2 > len(data):
            raise TruncatedFile(f"{path}: class {k} truncated")
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        end = offset + name_len + 4 * (dim + 1)
        if end > len(data):
            raise TruncatedFile(f"{path}: class {k} truncated")
        classes.append(data[offset:offset + name_len].decode("utf-8"))
        offset += name_len
        row = np.frombuffer(data, dtype="<f4", count=dim + 1, offset=offset)
        weights[k] = row[:-1]
        biases[k] = row[-1]
        offset = end
    return SvmModel(classes=tuple(classes), weights=weights, biases=biases,
                    lam=float("nan"))
