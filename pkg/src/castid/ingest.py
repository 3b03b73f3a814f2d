"""Dataset artifacts: manifest, CMEB embedding files, ASV scores, ground truth.

File formats
------------
Manifest: UTF-8 JSON object. ``cast`` is an array of
``{"character": ..., "actor": ...}``; paths are resolved relative to the
manifest's directory.

CMEB embedding file (little-endian):
    magic   4 bytes  b"CMEB"
    version u32      1
    dim     u32
    count   u32
    then ``count`` records, each: id_len u16, id_len UTF-8 bytes, dim x f32.

ASV scores: CSV with header ``track_id,frame_idx,score``.
Ground truth: CSV with header ``track_id,character``.
Track metadata: CSV with header ``track_id,n_frames``.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    DuplicateCharacter,
    DuplicateId,
    FrameIndexOutOfRange,
    MissingFile,
    NonFiniteValue,
    ParseError,
    TruncatedFile,
    UnknownTrackId,
    UnsupportedVersion,
)

CMEB_MAGIC = b"CMEB"
CMEB_VERSION = 1
CMEB_HEADER = struct.Struct("<4sIII")  # magic, version, dim, count


@dataclass(frozen=True)
class CastEntry:
    character_name: str
    actor_name: str

    def __post_init__(self):
        for label, value in (("character_name", self.character_name),
                             ("actor_name", self.actor_name)):
            if not value:
                raise ParseError(f"cast entry has empty {label}")
            if "\t" in value or "\n" in value:
                raise ParseError(f"{label} {value!r} contains tab/newline")


@dataclass(frozen=True)
class EmbeddingSet:
    dim: int
    ids: tuple[str, ...]
    vectors: np.ndarray  # count x dim, float32

    def __post_init__(self):
        if self.dim <= 0:
            raise ParseError("embedding dim must be positive")
        if self.vectors.shape != (len(self.ids), self.dim):
            raise DimMismatch(
                f"vector matrix {self.vectors.shape} does not match "
                f"{len(self.ids)} ids x dim {self.dim}")
        if len(set(self.ids)) != len(self.ids):
            raise DuplicateId("duplicate ids in embedding set")
        if self.vectors.size and not np.isfinite(self.vectors).all():
            raise NonFiniteValue("embedding set contains NaN/Inf")

    def __len__(self):
        return len(self.ids)

    def row(self, id_: str) -> np.ndarray:
        return self.vectors[self.ids.index(id_)]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {i: self.vectors[k] for k, i in enumerate(self.ids)}


@dataclass(frozen=True)
class TrackRecord:
    track_id: str
    n_frames: int
    internal_descriptor: np.ndarray
    context_descriptor: np.ndarray
    asv_scores: tuple[float, ...] | None = None
    gt_character: str | None = None

    def __post_init__(self):
        if self.n_frames <= 0:
            raise ParseError(f"track {self.track_id}: n_frames must be positive")
        if self.asv_scores is not None and len(self.asv_scores) != self.n_frames:
            raise FrameIndexOutOfRange(
                f"track {self.track_id}: {len(self.asv_scores)} ASV scores "
                f"for {self.n_frames} frames")


@dataclass(frozen=True)
class DatasetManifest:
    cast: tuple[CastEntry, ...]
    actor_embeddings_path: Path
    track_internal_path: Path
    track_context_path: Path
    voice_embeddings_path: Path | None = None
    asv_scores_path: Path | None = None
    ground_truth_path: Path | None = None
    tracks_path: Path | None = None
    embedding_dim_face: int = 4096
    embedding_dim_voice: int = 1024
    fps: float = 25.0

    def characters(self) -> list[str]:
        return [c.character_name for c in self.cast]


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and fully validate a manifest, cross-checking embedding dims."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"manifest {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ParseError(f"manifest {path}: top level must be an object")

    try:
        cast = tuple(CastEntry(c["character"], c["actor"]) for c in raw["cast"])
    except (KeyError, TypeError) as e:
        raise ParseError(f"manifest field 'cast': {e}") from e
    seen = set()
    for entry in cast:
        if entry.character_name in seen:
            raise DuplicateCharacter(
                f"character {entry.character_name!r} listed twice")
        seen.add(entry.character_name)

    base = path.parent

    def resolve(key: str, required: bool) -> Path | None:
        value = raw.get(key)
        if value is None:
            if required:
                raise ParseError(f"manifest field {key!r} is required")
            return None
        p = base / value
        if not p.is_file():
            raise MissingFile(f"manifest field {key!r}: no such file {p}")
        return p

    dim_face = int(raw.get("embedding_dim_face", 4096))
    dim_voice = int(raw.get("embedding_dim_voice", 1024))
    fps = float(raw.get("fps", 25.0))
    if dim_face <= 0 or dim_voice <= 0 or fps <= 0:
        raise ParseError("embedding dims and fps must be positive")

    manifest = DatasetManifest(
        cast=cast,
        actor_embeddings_path=resolve("actor_embeddings_path", True),
        track_internal_path=resolve("track_internal_path", True),
        track_context_path=resolve("track_context_path", True),
        voice_embeddings_path=resolve("voice_embeddings_path", False),
        asv_scores_path=resolve("asv_scores_path", False),
        ground_truth_path=resolve("ground_truth_path", False),
        tracks_path=resolve("tracks_path", False),
        embedding_dim_face=dim_face,
        embedding_dim_voice=dim_voice,
        fps=fps,
    )

    for key, p, want in (
            ("actor_embeddings_path", manifest.actor_embeddings_path, dim_face),
            ("track_internal_path", manifest.track_internal_path, dim_face),
            ("track_context_path", manifest.track_context_path, dim_face),
            ("voice_embeddings_path", manifest.voice_embeddings_path, dim_voice)):
        if p is None:
            continue
        got = peek_embedding_dim(p)
        if got != want:
            raise DimMismatch(
                f"manifest field {key!r}: file header says dim {got}, "
                f"manifest says {want}")
    return manifest


def peek_embedding_dim(path: str | Path) -> int:
    """Read only the CMEB header and return its dim field."""
    with open(path, "rb") as f:
        header = f.read(CMEB_HEADER.size)
    if len(header) < CMEB_HEADER.size:
        raise TruncatedFile(f"{path}: header shorter than 16 bytes")
    magic, version, dim, _count = CMEB_HEADER.unpack(header)
    if magic != CMEB_MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != CMEB_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    return dim


def read_embeddings(path: str | Path) -> EmbeddingSet:
    """Read a CMEB file; ids and rows come back in file order."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"embedding file not found: {path}")
    data = path.read_bytes()
    if len(data) < CMEB_HEADER.size:
        raise TruncatedFile(f"{path}: header shorter than 16 bytes")
    magic, version, dim, count = CMEB_HEADER.unpack_from(data)
    if magic != CMEB_MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != CMEB_VERSION:
        raise UnsupportedVersion(f"{path}: version {version} (expected 1)")
    if dim <= 0:
        raise ParseError(f"{path}: non-positive dim {dim}")

    ids: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    offset = CMEB_HEADER.size
    vec_bytes = 4 * dim
    for k in range(count):
        if offset + 2 > len(data):
            raise TruncatedFile(f"{path}: record {k} id length missing")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise TruncatedFile(f"{path}: record {k} truncated")
        try:
            ids.append(data[offset:offset + id_len].decode("utf-8"))
        except UnicodeDecodeError as e:
            raise ParseError(f"{path}: record {k} id is not UTF-8") from e
        offset += id_len
        vectors[k] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
    if vectors.size and not np.isfinite(vectors).all():
        raise NonFiniteValue(f"{path}: non-finite embedding value")
    try:
        return EmbeddingSet(dim=dim, ids=tuple(ids), vectors=vectors)
    except DuplicateId as e:
        raise DuplicateId(f"{path}: {e}") from e


def write_embeddings(emb: EmbeddingSet, path: str | Path) -> None:
    """Write a CMEB file. read_embeddings(write_embeddings(s)) == s bit-exactly."""
    path = Path(path)
    parts = [CMEB_HEADER.pack(CMEB_MAGIC, CMEB_VERSION, emb.dim, len(emb.ids))]
    vectors = np.ascontiguousarray(emb.vectors, dtype="<f4")
    for k, id_ in enumerate(emb.ids):
        encoded = id_.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(vectors[k].tobytes())
    path.write_bytes(b"".join(parts))


def load_tracks(manifest: DatasetManifest) -> list[TrackRecord]:
    """Build TrackRecords from the manifest's embedding and metadata files.

    Track ids come from the internal-descriptor file; the context file must
    carry the same id set. n_frames comes from tracks_path when present,
    else defaults to 1 (updated later if ASV rows arrive).
    """
    internal = read_embeddings(manifest.track_internal_path)
    context = read_embeddings(manifest.track_context_path)
    if set(internal.ids) != set(context.ids):
        raise ParseError("internal and context files disagree on track ids")
    ctx = context.as_dict()

    n_frames: dict[str, int] = {}
    if manifest.tracks_path is not None:
        for row in _read_csv(manifest.tracks_path, ("track_id", "n_frames")):
            n_frames[row["track_id"]] = int(row["n_frames"])

    gt: dict[str, str] = {}
    if manifest.ground_truth_path is not None:
        for row in _read_csv(manifest.ground_truth_path, ("track_id", "character")):
            gt[row["track_id"]] = row["character"]

    tracks = [
        TrackRecord(
            track_id=tid,
            n_frames=n_frames.get(tid, 1),
            internal_descriptor=internal.vectors[k],
            context_descriptor=ctx[tid],
            gt_character=gt.get(tid),
        )
        for k, tid in enumerate(internal.ids)
    ]
    if manifest.asv_scores_path is not None:
        tracks = load_asv_scores(manifest.asv_scores_path, tracks)
    return tracks


def load_asv_scores(path: str | Path, tracks: list[TrackRecord]) -> list[TrackRecord]:
    """Fill asv_scores on referenced tracks; others keep none.

    Rows may arrive in any order; scores are stored sorted by frame_idx.
    """
    by_id = {t.track_id: t for t in tracks}
    rows: dict[str, list[tuple[int, float]]] = {}
    for row in _read_csv(path, ("track_id", "frame_idx", "score")):
        tid = row["track_id"]
        if tid not in by_id:
            raise UnknownTrackId(f"{path}: unknown track id {tid!r}")
        try:
            idx, score = int(row["frame_idx"]), float(row["score"])
        except ValueError as e:
            raise ParseError(f"{path}: bad row for track {tid}: {e}") from e
        if not 0 <= idx < by_id[tid].n_frames:
            raise FrameIndexOutOfRange(
                f"{path}: frame {idx} out of range for track {tid} "
                f"({by_id[tid].n_frames} frames)")
        rows.setdefault(tid, []).append((idx, score))

    out = []
    for t in tracks:
        if t.track_id in rows:
            scores = tuple(s for _, s in sorted(rows[t.track_id]))
            if len(scores) != t.n_frames:
                raise FrameIndexOutOfRange(
                    f"{path}: track {t.track_id} has {len(scores)} scores "
                    f"for {t.n_frames} frames")
            t = replace(t, asv_scores=scores)
        out.append(t)
    return out


def _read_csv(path: str | Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != columns:
            raise ParseError(
                f"{path}: expected header {','.join(columns)}, "
                f"got {reader.fieldnames}")
        out = []
        for row in reader:
            if any(row[c] is None for c in columns):
                raise ParseError(f"{path}: short row {row}")
            out.append(row)
    return out
