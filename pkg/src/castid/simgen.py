"""Deterministic synthetic-episode generator.

Characters live on a unit sphere: each gets a face prototype, a context
prototype, a voice prototype, and a fixed identity shift that separates the
actor-image domain from the in-video domain. Profile tracks use a rotated
face prototype for the internal channel while the context channel stays
near the character's context prototype (with extra noise for profiles, so
context bridges the pose gap only partially and the voice stage has work
left to do).

All randomness comes from a 64-bit MMIX linear congruential generator with
Box-Muller normals, so the same config always produces byte-identical
files; the constants are recorded in the episode's sim_meta file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from .asv import segment_id_for
from .ingest import CastEntry, EmbeddingSet, write_embeddings
from .errors import ParseError

LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
LCG_MASK = (1 << 64) - 1

BACKGROUND_NAME = "__background__"


class Lcg:
    """MMIX LCG: state = state * 6364136223846793005 + 1442695040888963407 mod 2^64."""

    def __init__(self, seed: int):
        self.state = seed & LCG_MASK
        self._next_u64()  # burn one step so seed 0 is usable

    def _next_u64(self) -> int:
        self.state = (self.state * LCG_MULT + LCG_INC) & LCG_MASK
        return self.state

    def uniform(self) -> float:
        """Float in [0, 1) from the top 53 bits."""
        return (self._next_u64() >> 11) / float(1 << 53)

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(n)])

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + int(self.uniform() * (hi - lo + 1))

    def normals(self, n: int) -> np.ndarray:
        """Box-Muller pairs; an odd count drops the spare."""
        pairs = (n + 1) // 2
        u1 = (self.uniforms(pairs) * ((1 << 53) - 1) + 1) / float(1 << 53)
        u2 = self.uniforms(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:n]

    def unit_vector(self, dim: int) -> np.ndarray:
        v = self.normals(dim)
        return v / np.linalg.norm(v)

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates driven by this generator."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randint(0, i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx


@dataclass(frozen=True)
class SimConfig:
    n_characters: int = 15
    n_tracks: int = 1700
    n_actor_images_mean: int = 85
    n_segments: int = 350
    dim_face: int = 64
    dim_voice: int = 32
    domain_gap: float = 0.8
    profile_fraction: float = 0.3
    profile_gap: float = 1.2
    noise_sigma: float = 0.15
    profile_context_gap: float = 1.15    # angle between frontal and profile context
    speaking_fraction: float = 0.25
    background_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("profile_fraction", "speaking_fraction", "background_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ParseError(f"{name} must be in [0, 1]")
        if self.dim_face < 2 or self.dim_voice < 2:
            raise ParseError("embedding dims must be >= 2")
        if self.domain_gap < 0:
            raise ParseError("domain_gap must be >= 0")


@dataclass(frozen=True)
class GeneratedEpisode:
    directory: Path
    manifest_path: Path
    config: SimConfig


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _noisy(rng: Lcg, base: np.ndarray, sigma: float) -> np.ndarray:
    if sigma == 0.0:
        return _normalize(base.copy())
    return _normalize(base + sigma * rng.normals(len(base)))


def generate_episode(config: SimConfig, out_dir: str | Path) -> GeneratedEpisode:
    """Write a full synthetic episode into out_dir; same config, same bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = Lcg(config.seed)
    sigma = config.noise_sigma

    characters = [f"char{i:02d}" for i in range(config.n_characters)]
    cast = [CastEntry(c, f"actor{i:02d}") for i, c in enumerate(characters)]

    def rotate_away(base: np.ndarray, angle: float) -> np.ndarray:
        u = rng.normals(len(base))
        u -= (u @ base) * base
        u = _normalize(u)
        return math.cos(angle) * base + math.sin(angle) * u

    face_protos, ctx_protos, shifts, voice_protos = [], [], [], []
    profile_protos, profile_ctx_protos = [], []
    for _ in characters:
        p = rng.unit_vector(config.dim_face)
        c = rng.unit_vector(config.dim_face)
        face_protos.append(p)
        ctx_protos.append(c)
        shifts.append(rng.unit_vector(config.dim_face))
        voice_protos.append(rng.unit_vector(config.dim_voice))
        # each pose gets its own per-character cluster: the internal channel
        # moves by profile_gap, the context channel by the smaller
        # profile_context_gap (context is the more pose-stable cue)
        profile_protos.append(rotate_away(p, config.profile_gap))
        profile_ctx_protos.append(rotate_away(c, config.profile_context_gap))

    # actor images
    actor_ids, actor_vecs = [], []
    spread = max(1, min(20, config.n_actor_images_mean - 2))
    for i, character in enumerate(characters):
        count = max(2, config.n_actor_images_mean
                    + rng.randint(-spread, spread))
        centre = face_protos[i] + config.domain_gap * shifts[i]
        for k in range(count):
            actor_ids.append(f"{character}/img{k:04d}")
            actor_vecs.append(_noisy(rng, centre, sigma))

    # tracks
    n_bg = int(round(config.background_fraction * config.n_tracks))
    n_principal = config.n_tracks - n_bg
    n_speak = min(config.n_segments,
                  int(config.speaking_fraction * n_principal))
    speak_order = rng.permutation(n_principal)
    speaking = set(speak_order[:n_speak])

    track_ids, internal, context = [], [], []
    gt_rows, frames_rows, asv_rows, stats_rows, sim_rows = [], [], [], [], []
    voice_ids, voice_vecs = [], []
    for t in range(config.n_tracks):
        tid = f"trk{t:05d}"
        track_ids.append(tid)
        is_bg = t >= n_principal
        is_profile = False
        if is_bg:
            internal.append(rng.unit_vector(config.dim_face))
            context.append(rng.unit_vector(config.dim_face))
            n_frames = rng.randint(3, 20)
            gt_rows.append((tid, BACKGROUND_NAME))
            is_speaking = False
            area = 0.005 + 0.02 * rng.uniform()
            prenorm = 5.0 + 5.0 * rng.uniform()
        else:
            i = rng.randint(0, config.n_characters - 1)
            is_profile = rng.uniform() < config.profile_fraction
            is_speaking = t in speaking
            if is_profile:
                internal.append(_noisy(rng, profile_protos[i], sigma))
                context.append(_noisy(rng, profile_ctx_protos[i], sigma))
            else:
                internal.append(_noisy(rng, face_protos[i], sigma))
                context.append(_noisy(rng, ctx_protos[i], sigma))
            n_frames = rng.randint(60, 150) if is_speaking else rng.randint(10, 140)
            gt_rows.append((tid, characters[i]))
            area = 0.05 + 0.4 * rng.uniform()
            prenorm = 20.0 + 30.0 * rng.uniform()
            if is_speaking:
                voice_ids.append(segment_id_for(tid))
                voice_vecs.append(_noisy(rng, voice_protos[i], sigma))
        frames_rows.append((tid, n_frames))
        sim_rows.append((tid, gt_rows[-1][1], int(is_profile), int(is_speaking)))
        scores = [(0.75 + 0.2 * rng.uniform()) if is_speaking
                  else (0.05 + 0.2 * rng.uniform()) for _ in range(n_frames)]
        asv_rows.extend((tid, k, s) for k, s in enumerate(scores))
        stats_rows.append((tid, n_frames, area, prenorm,
                           sum(scores) / len(scores), int(is_bg)))

    def emb(ids, vecs, dim):
        mat = (np.stack(vecs).astype(np.float32) if vecs
               else np.empty((0, dim), np.float32))
        return EmbeddingSet(dim=dim, ids=tuple(ids), vectors=mat)

    write_embeddings(emb(actor_ids, actor_vecs, config.dim_face),
                     out / "actor_embeddings.cmeb")
    write_embeddings(emb(track_ids, internal, config.dim_face),
                     out / "track_internal.cmeb")
    write_embeddings(emb(track_ids, context, config.dim_face),
                     out / "track_context.cmeb")
    write_embeddings(emb(voice_ids, voice_vecs, config.dim_voice),
                     out / "voice_embeddings.cmeb")

    _write_csv(out / "asv_scores.csv", ("track_id", "frame_idx", "score"),
               [(tid, k, f"{s:.6f}") for tid, k, s in asv_rows])
    _write_csv(out / "ground_truth.csv", ("track_id", "character"), gt_rows)
    _write_csv(out / "tracks.csv", ("track_id", "n_frames"), frames_rows)
    _write_csv(out / "track_stats.csv",
               ("track_id", "n_frames", "area_fraction", "prenorm_norm",
                "mean_asv", "is_background"),
               [(tid, n, f"{a:.6f}", f"{p:.6f}", f"{m:.6f}", b)
                for tid, n, a, p, m, b in stats_rows])
    _write_csv(out / "sim_tracks.csv",
               ("track_id", "character", "is_profile", "is_speaking"), sim_rows)

    manifest = {
        "cast": [{"character": c.character_name, "actor": c.actor_name}
                 for c in cast],
        "actor_embeddings_path": "actor_embeddings.cmeb",
        "track_internal_path": "track_internal.cmeb",
        "track_context_path": "track_context.cmeb",
        "voice_embeddings_path": "voice_embeddings.cmeb",
        "asv_scores_path": "asv_scores.csv",
        "ground_truth_path": "ground_truth.csv",
        "tracks_path": "tracks.csv",
        "embedding_dim_face": config.dim_face,
        "embedding_dim_voice": config.dim_voice,
        "fps": 25.0,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")

    meta = dict(asdict(config),
                generator="MMIX LCG, Box-Muller normals",
                lcg_mult=LCG_MULT, lcg_inc=LCG_INC, lcg_modulus="2^64")
    (out / "sim_meta").write_text(
        "".join(f"{k} = {meta[k]}\n" for k in sorted(meta)), encoding="utf-8")

    return GeneratedEpisode(directory=out, manifest_path=manifest_path,
                            config=config)


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def summarize(episode_dir: str | Path) -> dict:
    """Recount the emitted files into a dataset statistics dict."""
    from .ingest import read_embeddings  # local to avoid cycle at import time

    out = Path(episode_dir)
    actor = read_embeddings(out / "actor_embeddings.cmeb")
    tracks = read_embeddings(out / "track_internal.cmeb")
    voice = read_embeddings(out / "voice_embeddings.cmeb")
    per_character: dict[str, int] = {}
    for id_ in actor.ids:
        per_character[id_.split("/", 1)[0]] = \
            per_character.get(id_.split("/", 1)[0], 0) + 1
    counts = sorted(per_character.values())
    return {
        "n_characters": len(per_character),
        "n_tracks": len(tracks),
        "n_segments": len(voice),
        "actor_images_max": counts[-1] if counts else 0,
        "actor_images_avg": (sum(counts) / len(counts)) if counts else 0.0,
        "actor_images_min": counts[0] if counts else 0,
    }
