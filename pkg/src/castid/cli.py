"""Operator entry point.

Subcommands: validate, simulate, run, eval, spectrogram, augment.
Exit codes: 0 success, 1 usage, 2 missing input, 3 validation failure,
4 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import wave
from dataclasses import fields, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import dsp, evaluation, imageops, pipeline, simgen
from .errors import (
    CastIdError,
    DimMismatch,
    MissingFile,
    MissingPrediction,
    StageOrderError,
    TooShort,
)
from .ingest import (
    EmbeddingSet,
    load_manifest,
    read_embeddings,
    write_embeddings,
)
from .pipeline import PipelineConfig
from .svm import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING = 2
EXIT_VALIDATION = 3
EXIT_STAGE = 4


def _parse_kv_file(path: Path) -> dict[str, str]:
    out = {}
    for line in path.read_text("utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CastIdError(f"{path}: bad config line {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _pipeline_config(path: Path | None, seed: int | None) -> PipelineConfig:
    """key = value config mirroring PipelineConfig, with flattened train keys."""
    config = PipelineConfig()
    if path is not None:
        raw = _parse_kv_file(path)
        train = config.train
        kw = {}
        for key, value in raw.items():
            if key in ("face_rank_fraction", "speech_correct_fraction",
                       "speak_threshold"):
                kw[key] = float(value)
            elif key in ("min_frames", "median_window"):
                kw[key] = int(value)
            elif key == "background_enabled":
                kw[key] = value.lower() in ("1", "true", "yes")
            elif key == "epochs":
                train = replace(train, epochs=int(value))
            elif key == "seed":
                train = replace(train, seed=int(value))
            elif key == "tolerance":
                train = replace(train, tolerance=float(value))
            elif key == "lambda_grid":
                train = replace(train, lambda_grid=tuple(
                    float(v) for v in value.split(",")))
            else:
                raise CastIdError(f"unknown config key {key!r}")
        config = replace(config, train=train, **kw)
    if seed is not None:
        config = replace(config, train=replace(config.train, seed=seed))
    return config


def _sim_config(path: Path | None, seed: int | None) -> simgen.SimConfig:
    config = simgen.SimConfig()
    if path is not None:
        raw = _parse_kv_file(path)
        kw = {}
        for f in fields(simgen.SimConfig):
            if f.name in raw:
                kw[f.name] = type(getattr(config, f.name))(
                    float(raw[f.name]) if f.type == "float" else raw[f.name])
        unknown = set(raw) - {f.name for f in fields(simgen.SimConfig)}
        if unknown:
            raise CastIdError(f"unknown simulator config keys {sorted(unknown)}")
        config = replace(config, **kw)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def cmd_validate(args) -> int:
    try:
        manifest = load_manifest(args.manifest)
        # walk every referenced file so errors surface here, not mid-run
        read_embeddings(manifest.actor_embeddings_path)
        from .ingest import load_tracks
        load_tracks(manifest)
        if manifest.voice_embeddings_path is not None:
            read_embeddings(manifest.voice_embeddings_path)
    except MissingFile as e:
        print(f"MissingFile: {e}", file=sys.stderr)
        return EXIT_MISSING
    except CastIdError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        config = _sim_config(args.config, args.seed)
        episode = simgen.generate_episode(config, args.out_dir)
        stats = simgen.summarize(episode.directory)
    except OSError as e:
        print(f"IoError: {e}", file=sys.stderr)
        return EXIT_MISSING
    except CastIdError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"characters      {stats['n_characters']}")
    print(f"tracks          {stats['n_tracks']}")
    print(f"speech segments {stats['n_segments']}")
    print(f"actor images    {stats['actor_images_max']} / "
          f"{stats['actor_images_avg']:.1f} / {stats['actor_images_min']}")
    return EXIT_OK


def cmd_run(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        print(f"output dir locked by another run: {lock}", file=sys.stderr)
        return EXIT_STAGE
    os.close(fd)
    try:
        manifest = load_manifest(args.manifest)
        config = _pipeline_config(args.config, args.seed)
        if args.stage == "all":
            state = pipeline.run_all(manifest, config)
        else:
            state = _run_single_stage(manifest, config, out, args.stage)
        pipeline.save_state(state, out)
    except MissingFile as e:
        print(f"MissingFile: {e}", file=sys.stderr)
        return EXIT_MISSING
    except (DimMismatch,) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except CastIdError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_STAGE
    finally:
        lock.unlink(missing_ok=True)
    print(f"labels written to {out / 'labels.csv'}")
    return EXIT_OK


def _run_single_stage(manifest, config, out: Path, stage: str):
    from .asv import gate_speaking_tracks
    from .ingest import load_tracks

    if stage == "1":
        actor = read_embeddings(manifest.actor_embeddings_path)
        return pipeline.run_stage1(manifest, actor, load_tracks(manifest), config)
    state = pipeline.load_state(manifest, config, out)
    if stage == "2":
        return pipeline.run_stage2(state)
    if stage == "voice":
        if manifest.voice_embeddings_path is None:
            raise StageOrderError("manifest has no voice embeddings")
        if not state.segments:
            state.segments = gate_speaking_tracks(
                [t for t in state.active_tracks() if t.asv_scores is not None],
                fps=manifest.fps, min_frames=config.min_frames,
                speak_threshold=config.speak_threshold,
                window=config.median_window)
        return pipeline.run_voice_stage(
            state, read_embeddings(manifest.voice_embeddings_path))
    if stage == "3":
        return pipeline.run_stage3_retrain(state)
    raise StageOrderError(f"unknown stage {stage!r}")


def cmd_eval(args) -> int:
    try:
        labels = pipeline.read_labels(args.labels)
        gt = {}
        with open(args.gt, newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                gt[row["track_id"]] = row["character"]
        if not gt:
            print("empty ground truth", file=sys.stderr)
            return EXIT_VALIDATION
        report = evaluation.evaluate(labels, gt)
    except FileNotFoundError as e:
        print(f"MissingFile: {e}", file=sys.stderr)
        return EXIT_MISSING
    except MissingPrediction as e:
        print(f"MissingPrediction: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    with open(out / "pr.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "recall", "precision"])
        thresholds = sorted({c for _, c in labels.values()}, reverse=True)
        for t, (r, p) in zip(thresholds, report.pr_points):
            writer.writerow([f"{t:.10g}", f"{r:.6f}", f"{p:.6f}"])
    print(f"accuracy {report.accuracy:.4f}, AP {report.average_precision:.4f}")
    return EXIT_OK


def _read_wav(path: Path) -> dsp.AudioClip:
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1 or w.getsampwidth() != 2:
            raise CastIdError(f"{path}: need 16-bit mono PCM")
        raw = w.readframes(w.getnframes())
        sr = w.getframerate()
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return dsp.AudioClip(samples=samples, sample_rate=sr)


def cmd_spectrogram(args) -> int:
    try:
        clip = _read_wav(Path(args.wav))
        spec = dsp.compute_spectrogram(clip)
    except FileNotFoundError as e:
        print(f"MissingFile: {e}", file=sys.stderr)
        return EXIT_MISSING
    except TooShort as e:
        print(f"TooShort: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except CastIdError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    if out.suffix == ".csv":
        with open(out, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            for col in spec.values.T:
                writer.writerow([f"{v:.8g}" for v in col])
    else:
        ids = tuple(f"frame{k:06d}" for k in range(spec.frames))
        write_embeddings(EmbeddingSet(dim=dsp.N_BINS, ids=ids,
                                      vectors=spec.values.T.astype(np.float32)),
                         out)
    print(f"512 x {spec.frames}")
    return EXIT_OK


def _load_png(path: Path) -> imageops.RasterImage:
    with Image.open(path) as im:
        im = im.convert("L" if im.mode in ("L", "1", "I;16") else "RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    return imageops.RasterImage(arr)


def _save_png(img: imageops.RasterImage, path: Path) -> None:
    arr = np.floor(img.pixels * 255.0 + 0.5).astype(np.uint8)  # round half up
    if arr.shape[2] == 1:
        Image.fromarray(arr[:, :, 0], mode="L").save(path)
    else:
        Image.fromarray(arr, mode="RGB").save(path)


def cmd_augment(args) -> int:
    in_dir, out_dir = Path(args.in_dir), Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffixes = ("_orig", "_con", "_low", "_flip")
    count = 0
    for path in sorted(in_dir.glob("*.png")):
        try:
            img = _load_png(path)
        except Exception as e:
            print(f"unreadable image {path}: {e}", file=sys.stderr)
            return EXIT_VALIDATION
        variants = imageops.augment_set([img], grayscale=args.grayscale)
        for suffix, variant in zip(suffixes, variants):
            _save_png(variant, out_dir / f"{path.stem}{suffix}.png")
            count += 1
    print(f"wrote {count} images")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="castid")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    p = sub.add_parser("validate", help="validate a dataset manifest")
    p.add_argument("manifest", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="generate a synthetic episode")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--config", type=Path, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run pipeline stages")
    p.add_argument("manifest", type=Path)
    p.add_argument("out_dir", type=Path)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--stage", choices=["1", "2", "voice", "3", "all"],
                   default="all")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score labels against ground truth")
    p.add_argument("labels", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("out_dir", type=Path)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectrogram", help="WAV to 512-bin spectrogram")
    p.add_argument("wav", type=Path)
    p.add_argument("out", type=Path)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("augment", help="4x augmentation over a PNG directory")
    p.add_argument("in_dir", type=Path)
    p.add_argument("out_dir", type=Path)
    p.add_argument("--grayscale", action="store_true")
    p.set_defaults(func=cmd_augment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
