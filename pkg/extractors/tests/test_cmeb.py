import struct

import numpy as np
import pytest

from castid_extractors.cmeb import HEADER, write_cmeb


def parse(blob):
    magic, version, dim, count = HEADER.unpack_from(blob)
    offset = HEADER.size
    records = []
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        id_ = blob[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        records.append((id_, vec))
    assert offset == len(blob)
    return magic, version, dim, records


def test_written_bytes_parse_back(tmp_path):
    rng = np.random.default_rng(0)
    records = [(f"id{i}", rng.normal(size=8).astype(np.float32))
               for i in range(4)]
    path = tmp_path / "x.cmeb"
    write_cmeb(path, 8, records)
    magic, version, dim, back = parse(path.read_bytes())
    assert (magic, version, dim) == (b"CMEB", 1, 8)
    for (id_a, vec_a), (id_b, vec_b) in zip(records, back):
        assert id_a == id_b
        assert np.array_equal(vec_a, vec_b)


def test_empty_set_is_header_only(tmp_path):
    path = tmp_path / "e.cmeb"
    write_cmeb(path, 4096, [])
    blob = path.read_bytes()
    assert len(blob) == 16
    assert HEADER.unpack(blob) == (b"CMEB", 1, 4096, 0)


def test_wrong_shape_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_cmeb(tmp_path / "b.cmeb", 4, [("a", np.zeros(5, np.float32))])


def test_non_finite_rejected(tmp_path):
    vec = np.full(4, np.nan, np.float32)
    with pytest.raises(ValueError):
        write_cmeb(tmp_path / "b.cmeb", 4, [("a", vec)])
