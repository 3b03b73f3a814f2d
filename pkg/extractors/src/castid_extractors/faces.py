"""Face-crop embedding extraction.

Input is a directory of images, optionally with a ``boxes.csv``
(``filename,x,y,w,h`` in pixels) giving the face box inside each image;
without it the whole image is the box. Two crops are supported per image:
the tight box (internal features) and the box extended on every side by
``crop_extension`` times its size (context features such as hair and
contour), clamped to the image borders.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .cmeb import write_cmeb
from .models import load_face_model

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


class UnreadableImage(Exception):
    pass


@dataclass(frozen=True)
class FaceJob:
    image_dir: Path
    out_path: Path
    context: bool = False          # extended crop instead of the tight one
    crop_extension: float = 0.25
    model: str = "gray64"


def _load_boxes(image_dir: Path) -> dict[str, tuple[int, int, int, int]]:
    path = image_dir / "boxes.csv"
    if not path.is_file():
        return {}
    boxes = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            boxes[row["filename"]] = (int(row["x"]), int(row["y"]),
                                      int(row["w"]), int(row["h"]))
    return boxes


def _crop(image: Image.Image, box: tuple[int, int, int, int],
          extension: float) -> Image.Image:
    x, y, w, h = box
    dx, dy = extension * w, extension * h
    left = max(0, int(round(x - dx)))
    top = max(0, int(round(y - dy)))
    right = min(image.width, int(round(x + w + dx)))
    bottom = min(image.height, int(round(y + h + dy)))
    return image.crop((left, top, right, bottom))


def extract_face_embeddings(job: FaceJob) -> int:
    """Write one embedding per image to job.out_path; returns the count."""
    model = load_face_model(job.model)
    boxes = _load_boxes(job.image_dir)
    records = []
    paths = sorted(p for p in job.image_dir.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    for path in paths:
        try:
            with Image.open(path) as im:
                im.load()
                box = boxes.get(path.name, (0, 0, im.width, im.height))
                crop = _crop(im, box, job.crop_extension if job.context else 0.0)
                records.append((path.stem, model.embed(crop)))
        except (UnidentifiedImageError, OSError) as e:
            raise UnreadableImage(f"{path}: {e}") from e
    write_cmeb(job.out_path, model.dim, records)
    return len(records)
