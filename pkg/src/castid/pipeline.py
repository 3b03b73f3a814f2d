"""Three-stage co-training over face and voice embeddings.

Stage 1 trains per-actor classifiers on actor-image embeddings and scores
every track's internal descriptor; the top-ranked fraction becomes the
trusted label set. Stage 2 retrains per-character classifiers on the
context descriptors of those trusted tracks and reclassifies the rest.
The voice stage propagates trusted labels to speech segments, trains
speaker classifiers, and corrects the top-ranked test segments' tracks.
Stage 3 retrains the character face classifier with the corrections folded
in and reclassifies every track; voice corrections always win over the
final face prediction.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import svm
from .asv import SpeechSegment, gate_speaking_tracks, segment_id_for
from .errors import (
    EmptyClass,
    MissingAsvScores,
    NoTrainSegments,
    ParseError,
    SingleClass,
    StageOrderError,
    UncoveredCastEntry,
)
from .ingest import DatasetManifest, EmbeddingSet, TrackRecord, load_tracks, read_embeddings
from .selection import RankedPrediction, rank_items, select_top_fraction
from .svm import SvmModel, TrainConfig

PROVENANCE_ORDER = ("stage1", "stage2", "voice", "stage3")


@dataclass(frozen=True)
class LabelRecord:
    track_id: str
    character: str
    confidence: float
    provenance: str
    confident: bool

    def __post_init__(self):
        if self.provenance not in PROVENANCE_ORDER:
            raise ParseError(f"bad provenance {self.provenance!r}")
        if not np.isfinite(self.confidence):
            raise ParseError(f"{self.track_id}: non-finite confidence")


@dataclass(frozen=True)
class PipelineConfig:
    face_rank_fraction: float = 0.5
    speech_correct_fraction: float = 0.8
    min_frames: int = 50
    speak_threshold: float = 0.5
    median_window: int = 9
    train: TrainConfig = field(default_factory=lambda: TrainConfig(
        lambda_grid=(1e-3,), epochs=150, tolerance=1e-7))
    background_enabled: bool = False

    def __post_init__(self):
        for name, frac in (("face_rank_fraction", self.face_rank_fraction),
                           ("speech_correct_fraction", self.speech_correct_fraction)):
            if not 0.0 < frac <= 1.0:
                raise ParseError(f"{name} must be in (0, 1]")


@dataclass
class PipelineState:
    manifest: DatasetManifest
    tracks: list[TrackRecord]
    config: PipelineConfig
    labels: dict[str, LabelRecord] = field(default_factory=dict)
    models: dict[str, SvmModel] = field(default_factory=dict)
    segments: list[SpeechSegment] = field(default_factory=list)
    audit_log: list[str] = field(default_factory=list)
    stage_labels: dict[str, dict[str, str]] = field(default_factory=dict)
    excluded_background: set[str] = field(default_factory=set)
    stages_done: list[str] = field(default_factory=list)

    def log(self, stage: str, event: str, detail: str = "") -> None:
        self.audit_log.append(f"{stage}\t{event}\t{detail}")

    def active_tracks(self) -> list[TrackRecord]:
        return [t for t in self.tracks if t.track_id not in self.excluded_background]

    def snapshot(self, stage: str) -> None:
        self.stage_labels[stage] = {t: r.character for t, r in self.labels.items()}
        self.stages_done.append(stage)


def _character_of_actor_image(image_id: str) -> str:
    """Actor embedding ids are '<character>/<image stem>'."""
    return image_id.split("/", 1)[0]


def _rank_and_mark(state: PipelineState, provisional: dict[str, LabelRecord],
                   stage: str) -> None:
    """Globally rank provisional labels and mark the top fraction confident."""
    ranked = rank_items([
        RankedPrediction(r.track_id, r.character, r.confidence)
        for r in provisional.values()])
    confident, remainder = select_top_fraction(ranked, state.config.face_rank_fraction)
    confident_ids = {p.item_id for p in confident}
    for tid, rec in provisional.items():
        state.labels[tid] = replace(rec, confident=tid in confident_ids)
    state.log(stage, "ranked", f"confident={len(confident)} rest={len(remainder)}")


def run_stage1(manifest: DatasetManifest, actor_embeddings: EmbeddingSet,
               tracks: list[TrackRecord],
               config: PipelineConfig | None = None) -> PipelineState:
    """Actor face classifier: initial track labels from actor images alone."""
    config = config or PipelineConfig()
    state = PipelineState(manifest=manifest, tracks=tracks, config=config)

    examples = [(actor_embeddings.vectors[k].astype(np.float64),
                 _character_of_actor_image(id_))
                for k, id_ in enumerate(actor_embeddings.ids)]
    covered = {c for _, c in examples}
    for entry in manifest.cast:
        if entry.character_name not in covered:
            raise UncoveredCastEntry(
                f"no actor images for {entry.actor_name!r} "
                f"(character {entry.character_name!r})")
    model = svm.train_ovr(examples, config.train)
    state.models["stage1"] = model

    active = state.active_tracks()
    provisional = {}
    if active:
        scores = svm.score_many(model, np.stack([t.internal_descriptor for t in active]))
        for t, row in zip(active, scores):
            k = int(np.argmax(row))
            provisional[t.track_id] = LabelRecord(
                t.track_id, model.classes[k], float(row[k]), "stage1", False)
        _rank_and_mark(state, provisional, "stage1")
    state.log("stage1", "done", f"tracks={len(active)}")
    state.snapshot("stage1")
    return state


def _train_character_model(state: PipelineState, stage: str,
                           train_ids: set[str]) -> SvmModel:
    """OvR face model on context descriptors of the given trusted tracks.

    Characters with no trusted track are dropped from this classifier.
    """
    by_track = {t.track_id: t for t in state.tracks}
    examples = [(by_track[tid].context_descriptor.astype(np.float64),
                 state.labels[tid].character)
                for tid in sorted(train_ids)]
    present = {c for _, c in examples}
    for character in state.manifest.characters():
        if character not in present:
            state.log(stage, "dropped_character", character)
    if len(present) < 2:
        raise SingleClass(f"{stage}: fewer than 2 characters have trusted tracks")
    return svm.train_ovr(examples, state.config.train)


def run_stage2(state: PipelineState) -> PipelineState:
    """Character face classifier: reclassify the tracks stage 1 was unsure of."""
    if "stage1" not in state.stages_done:
        raise StageOrderError("stage2 requires stage1")
    confident_ids = {tid for tid, r in state.labels.items() if r.confident}
    if not confident_ids:
        raise EmptyClass("stage2: no confident tracks from stage1")
    model = _train_character_model(state, "stage2", confident_ids)
    state.models["stage2"] = model

    by_track = {t.track_id: t for t in state.tracks}
    provisional = {}
    for tid, rec in state.labels.items():
        if rec.confident:
            provisional[tid] = rec  # label and provenance unchanged
        else:
            cls, conf = svm.predict(model, by_track[tid].context_descriptor)
            provisional[tid] = LabelRecord(tid, cls, conf, "stage2", False)
    _rank_and_mark(state, provisional, "stage2")
    state.log("stage2", "done", "")
    state.snapshot("stage2")
    return state


def _is_val_segment(segment_id: str) -> bool:
    """Deterministic 80/20 split by segment id hash."""
    digest = hashlib.sha256(segment_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % 5 == 0


def run_voice_stage(state: PipelineState, voice_embeddings: EmbeddingSet) -> PipelineState:
    """Speaker classifiers built from trusted face labels correct the rest."""
    if "stage2" not in state.stages_done:
        raise StageOrderError("voice stage requires stage2")
    voice = voice_embeddings.as_dict()
    segments = [replace(s, descriptor=voice[s.segment_id])
                for s in state.segments if s.segment_id in voice]
    skipped = len(state.segments) - len(segments)
    if skipped:
        state.log("voice", "segments_without_descriptor", str(skipped))

    train, val, test = [], [], []
    for s in segments:
        rec = state.labels.get(s.track_id)
        if rec is None:
            continue
        if rec.confident:
            (val if _is_val_segment(s.segment_id) else train).append(s)
        else:
            test.append(s)
    if not train:
        raise NoTrainSegments("no confident track has a gated speech segment")

    examples = [(s.descriptor.astype(np.float64), state.labels[s.track_id].character)
                for s in train]
    val_examples = [(s.descriptor.astype(np.float64),
                     state.labels[s.track_id].character) for s in val]
    model = svm.train_ovr(examples, state.config.train,
                          val=val_examples or None)
    state.models["voice"] = model
    state.log("voice", "trained",
              f"train={len(train)} val={len(val)} test={len(test)}")

    if test:
        preds = []
        by_segment = {s.segment_id: s for s in test}
        for s in test:
            cls, conf = svm.predict(model, s.descriptor)
            preds.append(RankedPrediction(s.segment_id, cls, conf))
        corrected, _ = select_top_fraction(
            rank_items(preds), state.config.speech_correct_fraction)
        for p in corrected:
            tid = by_segment[p.item_id].track_id
            state.labels[tid] = LabelRecord(
                tid, p.predicted_class, p.confidence, "voice", True)
        state.log("voice", "corrected", str(len(corrected)))
    else:
        state.log("voice", "no_test_segments", "")
    state.snapshot("voice")
    return state


def run_stage3_retrain(state: PipelineState) -> PipelineState:
    """Final character classifier over trusted + voice-corrected labels."""
    if "voice" not in state.stages_done:
        raise StageOrderError("stage3 requires the voice stage")
    train_ids = {tid for tid, r in state.labels.items() if r.confident}
    model = _train_character_model(state, "stage3", train_ids)
    state.models["stage3"] = model

    by_track = {t.track_id: t for t in state.tracks}
    provisional = {}
    voice_ids = set()
    for tid, rec in state.labels.items():
        if rec.provenance == "voice":
            provisional[tid] = rec  # voice overrides the face prediction
            voice_ids.add(tid)
        else:
            cls, conf = svm.predict(model, by_track[tid].context_descriptor)
            provisional[tid] = LabelRecord(tid, cls, conf, "stage3", False)
    _rank_and_mark(state, provisional, "stage3")
    for tid in voice_ids:
        state.labels[tid] = replace(state.labels[tid], confident=True)
    state.log("stage3", "done", "")
    state.snapshot("stage3")
    return state


@dataclass(frozen=True)
class TrackStats:
    """Track-level statistics feeding the background classifier."""
    track_id: str
    n_frames: int
    area_fraction: float       # mean face-box area / frame area
    prenorm_norm: float        # descriptor norm before L2 normalization
    mean_asv: float            # mean per-frame ASV score, 0 when absent

    def vector(self) -> np.ndarray:
        return np.array([float(self.n_frames), self.area_fraction,
                         self.prenorm_norm, self.mean_asv])


def classify_background(stats: list[TrackStats],
                        labeled_examples: list[tuple[TrackStats, bool]]
                        ) -> dict[str, bool]:
    """Binary SVM over 4-dim track statistics; True means background."""
    has_bg = any(is_bg for _, is_bg in labeled_examples)
    has_fg = any(not is_bg for _, is_bg in labeled_examples)
    if not (has_bg and has_fg):
        return {s.track_id: False for s in stats}
    examples = [(s.vector(), "background" if is_bg else "foreground")
                for s, is_bg in labeled_examples]
    model = svm.train_ovr(examples, TrainConfig(lambda_grid=(1e-3,), epochs=200))
    return {s.track_id: svm.predict(model, s.vector())[0] == "background"
            for s in stats}


def load_track_stats(path: str | Path) -> list[TrackStats]:
    """CSV: track_id,n_frames,area_fraction,prenorm_norm,mean_asv[,is_background]."""
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out.append((TrackStats(
                track_id=row["track_id"],
                n_frames=int(row["n_frames"]),
                area_fraction=float(row["area_fraction"]),
                prenorm_norm=float(row["prenorm_norm"]),
                mean_asv=float(row["mean_asv"]),
            ), row.get("is_background", "") == "1"))
    return out


def run_all(manifest: DatasetManifest, config: PipelineConfig | None = None
            ) -> PipelineState:
    """Background gate (optional) -> stage1 -> stage2 -> voice -> stage3.

    Without voice descriptors or ASV scores the run stops after stage 2 and
    still produces labels.
    """
    config = config or PipelineConfig()
    actor_embeddings = read_embeddings(manifest.actor_embeddings_path)
    tracks = load_tracks(manifest)

    excluded: set[str] = set()
    if config.background_enabled:
        stats_path = manifest.actor_embeddings_path.parent / "track_stats.csv"
        if stats_path.is_file():
            labeled = load_track_stats(stats_path)
            flags = classify_background([s for s, _ in labeled], labeled)
            excluded = {tid for tid, is_bg in flags.items() if is_bg}

    state = run_stage1(manifest, actor_embeddings,
                       [t for t in tracks if t.track_id not in excluded], config)
    state.excluded_background = excluded
    if excluded:
        state.log("background", "excluded", str(len(excluded)))
    if not state.labels:
        state.log("stage2", "skipped", "no tracks")
        return state
    run_stage2(state)

    if manifest.voice_embeddings_path is None or manifest.asv_scores_path is None:
        state.log("voice", "skipped", "no voice descriptors or ASV scores")
        return state

    state.segments = gate_speaking_tracks(
        [t for t in state.active_tracks() if t.asv_scores is not None],
        fps=manifest.fps, min_frames=config.min_frames,
        speak_threshold=config.speak_threshold, window=config.median_window)
    state.log("asv", "gated", f"segments={len(state.segments)}")
    voice_embeddings = read_embeddings(manifest.voice_embeddings_path)
    try:
        run_voice_stage(state, voice_embeddings)
    except NoTrainSegments as e:
        state.log("voice", "skipped", str(e))
        return state
    run_stage3_retrain(state)
    return state


def write_labels(state: PipelineState, path: str | Path) -> None:
    """Deterministic labels CSV: track_id,character,confidence,provenance,confident."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["track_id", "character", "confidence", "provenance",
                         "confident"])
        for tid in sorted(state.labels):
            r = state.labels[tid]
            writer.writerow([r.track_id, r.character, f"{r.confidence:.10g}",
                             r.provenance, "1" if r.confident else "0"])


def write_audit(state: PipelineState, path: str | Path) -> None:
    Path(path).write_text("".join(line + "\n" for line in state.audit_log),
                          encoding="utf-8")


def save_state(state: PipelineState, out_dir: str | Path) -> None:
    """Checkpoint labels, models, segments and progress into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_labels(state, out / "labels.csv")
    write_audit(state, out / "audit.log")
    for stage, model in state.models.items():
        svm.save_model(model, out / f"model_{stage}.cmsv")
    meta = {
        "stages_done": state.stages_done,
        "segments": [[s.segment_id, s.track_id, s.duration_s]
                     for s in state.segments],
        "excluded_background": sorted(state.excluded_background),
        "stage_labels": state.stage_labels,
        "label_records": {tid: [r.character, r.confidence, r.provenance,
                                r.confident]
                          for tid, r in state.labels.items()},
    }
    (out / "state.json").write_text(json.dumps(meta, sort_keys=True),
                                    encoding="utf-8")


def load_state(manifest: DatasetManifest, config: PipelineConfig,
               out_dir: str | Path) -> PipelineState:
    """Rebuild a checkpointed state; tracks are reloaded from the manifest."""
    out = Path(out_dir)
    meta_path = out / "state.json"
    if not meta_path.is_file():
        raise StageOrderError(f"no checkpoint in {out}")
    meta = json.loads(meta_path.read_text("utf-8"))
    state = PipelineState(manifest=manifest, tracks=load_tracks(manifest),
                          config=config)
    state.stages_done = list(meta["stages_done"])
    state.excluded_background = set(meta["excluded_background"])
    state.stage_labels = {k: dict(v) for k, v in meta["stage_labels"].items()}
    state.segments = [SpeechSegment(sid, tid, dur)
                      for sid, tid, dur in meta["segments"]]
    state.labels = {tid: LabelRecord(tid, c, conf, prov, bool(confident))
                    for tid, (c, conf, prov, confident)
                    in meta["label_records"].items()}
    for stage in state.stages_done:
        model_path = out / f"model_{stage}.cmsv"
        if model_path.is_file():
            state.models[stage] = svm.load_model(model_path)
    audit_path = out / "audit.log"
    if audit_path.is_file():
        state.audit_log = audit_path.read_text("utf-8").splitlines()
    return state


def read_labels(path: str | Path) -> dict[str, tuple[str, float]]:
    """track_id -> (character, confidence) from a labels CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            out[row["track_id"]] = (row["character"], float(row["confidence"]))
    return out
