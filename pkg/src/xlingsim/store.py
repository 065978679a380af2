"""Bit-exact storage of sentence-embedding matrices plus tabular input loaders.

Embedding file layout (all integers little-endian):

    magic "XEMB" (4 bytes)
    format version, u16 (currently 1)
    flags, u16 (bit 0: rows are L2-normalized)
    n, u32 | d, u32
    model-id length u16 + UTF-8 bytes
    language-id length u16 + UTF-8 bytes
    payload: n*d float32, little-endian, row-major
    CRC32 of payload, u32

The payload round-trips bitwise; normalization is re-derived on load rather
than trusted from the flag.
"""

from __future__ import annotations

import csv
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, SchemaError, ValidationError

MAGIC = b"XEMB"
FORMAT_VERSION = 1
FLAG_NORMALIZED = 0x0001

# Extractors write float32; unit norms survive the cast only to ~1e-4.
NORM_TOL = 1e-4

TASKS = ("NER", "POS", "SENT")
URIEL_KINDS = ("genetic", "syntactic", "phonological", "inventory", "geographic")


def is_language_code(code: str) -> bool:
    """Three lowercase ASCII letters; full ISO registry lookup is out of scope."""
    return len(code) == 3 and all("a" <= c <= "z" for c in code)


@dataclass(frozen=True)
class EmbeddingMatrix:
    """N x d sentence embeddings for one (model, language), float32 storage."""

    model_id: str
    language_id: str
    n_sentences: int
    dim: int
    rows: np.ndarray
    normalized: bool = False

    @classmethod
    def from_rows(cls, model_id: str, language_id: str, rows: np.ndarray,
                  normalized: bool = False) -> "EmbeddingMatrix":
        rows = np.ascontiguousarray(rows, dtype=np.float32)
        m = cls(model_id, language_id, rows.shape[0], rows.shape[1], rows, normalized)
        m.validate()
        return m

    def validate(self) -> None:
        """Raise ValidationError naming the first violated invariant."""
        if not self.model_id:
            raise ValidationError("empty model id")
        if not is_language_code(self.language_id):
            raise ValidationError(
                f"invalid language code {self.language_id!r} (want 3 lowercase ASCII letters)")
        if self.rows.ndim != 2:
            raise ValidationError(f"rows must be 2-D, got {self.rows.ndim}-D")
        if self.rows.dtype != np.float32:
            raise ValidationError(f"rows must be float32, got {self.rows.dtype}")
        if self.n_sentences <= 0 or self.dim <= 0:
            raise ValidationError("n_sentences and dim must be positive")
        if self.rows.shape != (self.n_sentences, self.dim):
            raise ValidationError(
                f"shape mismatch: declared {(self.n_sentences, self.dim)}, "
                f"stored {self.rows.shape}")
        if not np.isfinite(self.rows).all():
            raise ValidationError("non-finite entry in embedding rows")
        if self.normalized:
            norms = np.linalg.norm(self.rows.astype(np.float64), axis=1)
            bad = np.nonzero(np.abs(norms - 1.0) > NORM_TOL)[0]
            if bad.size:
                raise ValidationError(
                    f"row {bad[0]} has L2 norm {norms[bad[0]]:.6f}, "
                    f"outside 1 +/- {NORM_TOL}")

    def freeze(self) -> "EmbeddingMatrix":
        """Mark the row buffer read-only; loaded matrices are shared immutably."""
        self.rows.flags.writeable = False
        return self


def normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Return a copy with every row divided by its L2 norm.

    Norms are computed in float64 before casting back to float32 storage.
    A zero-norm row is an error naming the row index.
    """
    rows = m.rows.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValidationError(f"zero-norm row {zero[0]}")
    out = (rows / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix.from_rows(m.model_id, m.language_id, out, normalized=True)


def write_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    """Serialize a validated matrix to the binary embedding format."""
    m.validate()
    model_b = m.model_id.encode("utf-8")
    lang_b = m.language_id.encode("utf-8")
    if len(model_b) > 0xFFFF or len(lang_b) > 0xFFFF:
        raise ValidationError("identifier too long for format")
    flags = FLAG_NORMALIZED if m.normalized else 0
    payload = np.ascontiguousarray(m.rows, dtype="<f4").tobytes()
    blob = b"".join([
        MAGIC,
        struct.pack("<HHII", FORMAT_VERSION, flags, m.n_sentences, m.dim),
        struct.pack("<H", len(model_b)), model_b,
        struct.pack("<H", len(lang_b)), lang_b,
        payload,
        struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF),
    ])
    Path(path).write_bytes(blob)


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read and re-validate an embedding file.

    The normalized status is re-derived from the actual row norms. A file
    whose flag claims normalization that the payload does not satisfy is
    rejected rather than silently downgraded.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: unrecognized format (bad magic)")
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated header")
    version, flags, n, d = struct.unpack_from("<HHII", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    off = 16
    model_id, off = _read_str(blob, off, path, "model id")
    language_id, off = _read_str(blob, off, path, "language id")
    if n == 0 or d == 0:
        raise FormatError(f"{path}: zero dimension in header (n={n}, d={d})")
    need = n * d * 4
    if len(blob) - off - 4 < need:
        raise FormatError(f"{path}: truncated payload "
                          f"(header says {n}x{d}, {len(blob) - off - 4} bytes present)")
    if len(blob) - off - 4 > need:
        raise FormatError(f"{path}: trailing bytes after payload")
    payload = blob[off:off + need]
    (crc_stored,) = struct.unpack_from("<I", blob, off + need)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise FormatError(f"{path}: payload checksum mismatch")
    rows = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float32)

    declared_norm = bool(flags & FLAG_NORMALIZED)
    if not np.isfinite(rows).all():
        raise ValidationError(f"{path}: non-finite entry in embedding rows")
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    actually_norm = bool(np.all(np.abs(norms - 1.0) <= NORM_TOL))
    if declared_norm and not actually_norm:
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValidationError(
            f"{path}: norm check failure, row {bad} has L2 norm {norms[bad]:.6f}")
    m = EmbeddingMatrix(model_id, language_id, n, d, rows, actually_norm)
    m.validate()
    return m.freeze()


def _read_str(blob: bytes, off: int, path, what: str) -> tuple[str, int]:
    if len(blob) < off + 2:
        raise FormatError(f"{path}: truncated header ({what} length)")
    (length,) = struct.unpack_from("<H", blob, off)
    off += 2
    if len(blob) < off + length:
        raise FormatError(f"{path}: truncated header ({what} bytes)")
    try:
        s = blob[off:off + length].decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: {what} is not valid UTF-8") from e
    return s, off + length


# ---------------------------------------------------------------------------
# Tabular inputs


@dataclass(frozen=True)
class TransferRecord:
    """Observed zero-shot transfer score for one (model, task, source, target)."""

    model_id: str
    task: str
    source: str
    target: str
    score: float


@dataclass(frozen=True)
class UrielDistance:
    """Typological distance, symmetric under (lang_a, lang_b) swap."""

    lang_a: str
    lang_b: str
    kind: str
    value: float


@dataclass(frozen=True)
class CoverageTable:
    """Per (model, language): was the language in the model's pretraining data."""

    entries: dict

    def seen(self, model_id: str, language_id: str) -> bool:
        key = (model_id, language_id)
        if key not in self.entries:
            raise ValidationError(
                f"missing coverage entry for (model, language) = {key}")
        return self.entries[key]

    def models(self) -> list[str]:
        return sorted({m for m, _ in self.entries})


def _open_csv(path: str | Path, expected: list[str]):
    fh = open(path, newline="", encoding="utf-8-sig")
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or sorted(reader.fieldnames) != sorted(expected):
        fh.close()
        raise SchemaError(
            f"{path}: expected header {','.join(expected)}, got "
            f"{','.join(reader.fieldnames or [])}")
    return fh, reader


def _parse_score(raw: str, path, line: int, lo=0.0, hi=1.0, what="score") -> float:
    try:
        v = float(raw)
    except ValueError:
        raise SchemaError(f"{path} line {line}: {what} {raw!r} is not a number")
    if not np.isfinite(v):
        raise SchemaError(f"{path} line {line}: {what} is not finite")
    if not lo <= v <= hi:
        raise SchemaError(f"{path} line {line}: {what} out of range [{lo}, {hi}]: {v}")
    return v


def _check_lang(code: str, path, line: int, column: str) -> str:
    if not is_language_code(code):
        raise SchemaError(f"{path} line {line}: bad language code {code!r} in {column}")
    return code


def load_transfer_csv(path: str | Path) -> list[TransferRecord]:
    """Load transfer scores; header model,task,source,target,score."""
    fh, reader = _open_csv(path, ["model", "task", "source", "target", "score"])
    records, seen = [], set()
    with fh:
        for line, row in enumerate(reader, start=2):
            model = row["model"].strip()
            if not model:
                raise SchemaError(f"{path} line {line}: empty model id")
            task = row["task"].strip()
            if task not in TASKS:
                raise SchemaError(f"{path} line {line}: unknown task {task!r}")
            source = _check_lang(row["source"].strip(), path, line, "source")
            target = _check_lang(row["target"].strip(), path, line, "target")
            if source == target:
                raise SchemaError(f"{path} line {line}: source equals target ({source})")
            score = _parse_score(row["score"], path, line)
            key = (model, task, source, target)
            if key in seen:
                raise SchemaError(f"{path} line {line}: duplicate record for {key}")
            seen.add(key)
            records.append(TransferRecord(model, task, source, target, score))
    return records


def load_uriel_csv(path: str | Path) -> list[UrielDistance]:
    """Load typological distances; header lang_a,lang_b,kind,value.

    The unordered (lang_a, lang_b, kind) triple is the key: a repeated pair,
    in either orientation, is rejected. Absent pairs are legal and must be
    handled by consumers.
    """
    fh, reader = _open_csv(path, ["lang_a", "lang_b", "kind", "value"])
    records, seen = [], set()
    with fh:
        for line, row in enumerate(reader, start=2):
            a = _check_lang(row["lang_a"].strip(), path, line, "lang_a")
            b = _check_lang(row["lang_b"].strip(), path, line, "lang_b")
            kind = row["kind"].strip()
            if kind not in URIEL_KINDS:
                raise SchemaError(f"{path} line {line}: unknown distance kind {kind!r}")
            value = _parse_score(row["value"], path, line, what="value")
            key = (min(a, b), max(a, b), kind)
            if key in seen:
                raise SchemaError(
                    f"{path} line {line}: duplicate distance for pair {key} "
                    f"(pairs are unordered)")
            seen.add(key)
            records.append(UrielDistance(a, b, kind, value))
    return records


def load_coverage_csv(path: str | Path) -> CoverageTable:
    """Load pretraining coverage; header model,language,seen with seen in {true,false}."""
    fh, reader = _open_csv(path, ["model", "language", "seen"])
    entries = {}
    with fh:
        for line, row in enumerate(reader, start=2):
            model = row["model"].strip()
            if not model:
                raise SchemaError(f"{path} line {line}: empty model id")
            lang = _check_lang(row["language"].strip(), path, line, "language")
            raw = row["seen"].strip()
            if raw not in ("true", "false"):
                raise SchemaError(f"{path} line {line}: seen must be true or false, got {raw!r}")
            key = (model, lang)
            if key in entries:
                raise SchemaError(f"{path} line {line}: duplicate coverage entry for {key}")
            entries[key] = raw == "true"
    return CoverageTable(entries)
