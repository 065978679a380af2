"""Writer and header reader for the xemb embedding interchange format.

Layout (integers little-endian): magic "XEMB", version u16 = 1, flags u16
(bit 0 marks L2-normalized rows), n u32, d u32, length-prefixed UTF-8 model
id and language id, n*d float32 row-major payload, CRC32 of the payload as
a trailing u32. The consuming toolkit revalidates everything on load; this
module is the producing side of that contract.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"XEMB"
FORMAT_VERSION = 1
FLAG_NORMALIZED = 0x0001


def write_xemb(path: str | Path, model_id: str, language_id: str,
               rows: np.ndarray, normalized: bool) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.size == 0:
        raise ValueError(f"rows must be a non-empty 2-D array, got {rows.shape}")
    if not np.isfinite(rows).all():
        raise ValueError("non-finite embedding value")
    n, d = rows.shape
    model_b = model_id.encode("utf-8")
    lang_b = language_id.encode("utf-8")
    payload = rows.tobytes()
    blob = b"".join([
        MAGIC,
        struct.pack("<HHII", FORMAT_VERSION,
                    FLAG_NORMALIZED if normalized else 0, n, d),
        struct.pack("<H", len(model_b)), model_b,
        struct.pack("<H", len(lang_b)), lang_b,
        payload,
        struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF),
    ])
    Path(path).write_bytes(blob)


@dataclass(frozen=True)
class XembHeader:
    model_id: str
    language_id: str
    n: int
    d: int
    normalized: bool
    payload_crc: int


def read_header(path: str | Path) -> XembHeader:
    """Parse header and verify the payload checksum without keeping the rows."""
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: not an xemb file")
    version, flags, n, d = struct.unpack_from("<HHII", blob, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 16
    (mlen,) = struct.unpack_from("<H", blob, off)
    model_id = blob[off + 2:off + 2 + mlen].decode("utf-8")
    off += 2 + mlen
    (llen,) = struct.unpack_from("<H", blob, off)
    language_id = blob[off + 2:off + 2 + llen].decode("utf-8")
    off += 2 + llen
    payload = blob[off:off + n * d * 4]
    if len(payload) != n * d * 4:
        raise ValueError(f"{path}: truncated payload")
    (crc_stored,) = struct.unpack_from("<I", blob, off + n * d * 4)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    if crc != crc_stored:
        raise ValueError(f"{path}: payload checksum mismatch")
    return XembHeader(model_id, language_id, n, d,
                      bool(flags & FLAG_NORMALIZED), crc)


def read_rows(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    header = read_header(path)
    off = 16
    for _ in range(2):
        (length,) = struct.unpack_from("<H", blob, off)
        off += 2 + length
    return np.frombuffer(blob, dtype="<f4", count=header.n * header.d,
                         offset=off).reshape(header.n, header.d).copy()
