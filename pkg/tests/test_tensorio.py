import struct

import numpy as np
import pytest

from hoiscore import tensorio
from hoiscore.errors import BadMagic, BadVersion, TruncatedPayload


def test_round_trip_bit_exact(tmp_path):
    mat = np.arange(6, dtype=np.float32).reshape(2, 3) / 7
    path = tmp_path / "m.dytf"
    tensorio.write_tensor(mat, path)
    back = tensorio.read_tensor(path)
    assert back.shape == (2, 3)
    assert back.tobytes() == mat.tobytes()
    # write again: files identical byte for byte
    path2 = tmp_path / "m2.dytf"
    tensorio.write_tensor(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_rank3_and_empty(tmp_path):
    for arr in (np.zeros((0, 4), np.float32), np.random.rand(2, 3, 4).astype(np.float32)):
        p = tmp_path / "t.dytf"
        tensorio.write_tensor(arr, p)
        back = tensorio.read_tensor(p)
        assert back.shape == arr.shape
        assert back.tobytes() == arr.tobytes()


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.dytf"
    p.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(BadMagic):
        tensorio.read_tensor(p)


def test_bad_version(tmp_path):
    p = tmp_path / "bad.dytf"
    p.write_bytes(tensorio.MAGIC + struct.pack("<HHI", 99, 0, 1) + struct.pack("<I", 0))
    with pytest.raises(BadVersion):
        tensorio.read_tensor(p)


def test_truncated_payload(tmp_path):
    p = tmp_path / "short.dytf"
    header = tensorio.MAGIC + struct.pack("<HHI", 1, 0, 2) + struct.pack("<2I", 2, 3)
    p.write_bytes(header + b"\x00" * (5 * 4))  # dims say 6 floats, only 5 present
    with pytest.raises(TruncatedPayload):
        tensorio.read_tensor(p)
