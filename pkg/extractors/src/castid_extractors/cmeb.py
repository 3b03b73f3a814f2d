"""CMEB writer: the wire format shared with the identification engine.

Little-endian layout: magic "CMEB", version u32 (1), dim u32, count u32,
then per record a u16 id length, the UTF-8 id bytes, and dim float32s.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CMEB"
VERSION = 1
HEADER = struct.Struct("<4sIII")


def write_cmeb(path: str | Path, dim: int,
               records: list[tuple[str, np.ndarray]]) -> None:
    if dim <= 0:
        raise ValueError("dim must be positive")
    parts = [HEADER.pack(MAGIC, VERSION, dim, len(records))]
    for id_, vec in records:
        vec = np.ascontiguousarray(vec, dtype="<f4")
        if vec.shape != (dim,):
            raise ValueError(f"{id_}: vector shape {vec.shape}, expected ({dim},)")
        if not np.isfinite(vec).all():
            raise ValueError(f"{id_}: non-finite embedding value")
        encoded = id_.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(vec.tobytes())
    Path(path).write_bytes(b"".join(parts))
