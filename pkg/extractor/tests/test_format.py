import numpy as np
import pytest

from xemb_extractor.format import read_header, read_rows, write_xemb


def test_round_trip(tmp_path):
    rows = np.random.default_rng(0).standard_normal((5, 3)).astype(np.float32)
    path = tmp_path / "x.xemb"
    write_xemb(path, "enc", "aaa", rows, normalized=False)
    header = read_header(path)
    assert (header.model_id, header.language_id) == ("enc", "aaa")
    assert (header.n, header.d) == (5, 3)
    assert header.normalized is False
    np.testing.assert_array_equal(read_rows(path), rows)


def test_magic_and_crc(tmp_path):
    rows = np.ones((2, 2), dtype=np.float32)
    path = tmp_path / "x.xemb"
    write_xemb(path, "enc", "aaa", rows, normalized=True)
    blob = bytearray(path.read_bytes())
    assert bytes(blob[:4]) == b"XEMB"
    blob[-8] ^= 0x01
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="checksum"):
        read_header(path)


def test_rejects_nan(tmp_path):
    rows = np.full((2, 2), np.nan, dtype=np.float32)
    with pytest.raises(ValueError, match="non-finite"):
        write_xemb(tmp_path / "x.xemb", "enc", "aaa", rows, normalized=False)
