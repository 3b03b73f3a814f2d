"""castid-extract: batch embedding extraction into CMEB files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .faces import FaceJob, UnreadableImage, extract_face_embeddings
from .models import ModelLoadError
from .voice import UnreadableAudio, VoiceJob, extract_voice_embeddings


def cmd_faces(args) -> int:
    job = FaceJob(image_dir=args.image_dir, out_path=args.out,
                  context=args.context, crop_extension=args.crop_extension,
                  model=args.model)
    count = extract_face_embeddings(job)
    print(f"wrote {count} face embeddings to {args.out}")
    return 0


def cmd_voice(args) -> int:
    job = VoiceJob(source=args.source, out_path=args.out, model=args.model)
    count = extract_voice_embeddings(job)
    print(f"wrote {count} voice embeddings to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="castid-extract")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("faces", help="image directory to face CMEB")
    p.add_argument("image_dir", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--context", action="store_true",
                   help="extended crop (hair/contour) instead of tight box")
    p.add_argument("--crop-extension", type=float, default=0.25)
    p.add_argument("--model", default="gray64")
    p.set_defaults(func=cmd_faces)

    p = sub.add_parser("voice", help="segment WAVs to voice CMEB")
    p.add_argument("source", type=Path,
                   help="directory of WAVs or a text file listing them")
    p.add_argument("out", type=Path)
    p.add_argument("--model", default="specstats")
    p.set_defaults(func=cmd_voice)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelLoadError as e:
        print(f"model load failed: {e}", file=sys.stderr)
        return 2
    except (UnreadableImage, UnreadableAudio) as e:
        print(f"unreadable input: {e}", file=sys.stderr)
        return 3
    except FileNotFoundError as e:
        print(f"missing input: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
