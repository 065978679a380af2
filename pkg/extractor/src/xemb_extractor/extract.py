"""Sentence encoding: mean-pooled final-layer states, L2-normalized, to xemb.

A job covers one encoder and several languages whose corpus files are
line-parallel (line i of every file is a translation of the same sentence).
Pooling averages final-layer token vectors over non-padding positions;
sequence-start/end tokens are included by default and can be excluded with
a flag. Outputs are deterministic for fixed weights and inputs: the model
runs in eval mode with no dropout and no gradient state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .format import read_header, write_xemb


class ExtractionError(Exception):
    pass


@dataclass
class ExtractionJob:
    model_ref: str               # hub id or local model directory
    languages: list
    corpus_dir: Path
    out_dir: Path
    batch_size: int = 32
    max_len: int = 128
    include_special: bool = True


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def output_path(job: ExtractionJob, language: str) -> Path:
    return Path(job.out_dir) / f"{slug(job.model_ref)}__{language}.xemb"


def read_corpus(job: ExtractionJob) -> dict:
    """Load per-language sentence lists, enforcing line-parallel alignment."""
    if not job.languages:
        raise ExtractionError("no languages requested")
    texts = {}
    for lang in job.languages:
        path = Path(job.corpus_dir) / f"{lang}.txt"
        if not path.exists():
            raise ExtractionError(f"missing corpus file {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
        for i, line in enumerate(lines, start=1):
            if not line.strip():
                raise ExtractionError(f"{path}: line {i}: empty sentence")
        if not lines:
            raise ExtractionError(f"{path}: empty corpus")
        texts[lang] = lines
    counts = {lang: len(lines) for lang, lines in texts.items()}
    if len(set(counts.values())) != 1:
        raise ExtractionError(f"alignment mismatch: line counts differ {counts}")
    return texts


def load_encoder(model_ref: str):
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_ref)
    model = AutoModel.from_pretrained(model_ref)
    model.eval()
    return tokenizer, model


def encode_sentences(sentences: list, tokenizer, model, batch_size: int,
                     max_len: int, include_special: bool) -> np.ndarray:
    """Mean-pool final-layer token vectors per sentence, then L2-normalize."""
    pooled = []
    with torch.no_grad():
        for start in range(0, len(sentences), batch_size):
            batch = sentences[start:start + batch_size]
            try:
                enc = tokenizer(batch, padding=True, truncation=True,
                                max_length=max_len, return_tensors="pt",
                                return_special_tokens_mask=True)
                special = enc.pop("special_tokens_mask")
                hidden = model(**enc).last_hidden_state
            except Exception as exc:
                raise ExtractionError(
                    f"encoding failure at line {start + 1}: {exc}") from exc
            mask = enc["attention_mask"]
            if not include_special:
                mask = mask * (1 - special)
            weights = mask.unsqueeze(-1).to(hidden.dtype)
            denom = weights.sum(dim=1)
            if (denom == 0).any():
                bad = int((denom == 0).any(dim=-1).nonzero()[0, 0])
                raise ExtractionError(
                    f"encoding failure at line {start + bad + 1}: "
                    f"no tokens left to pool")
            pooled.append(((hidden * weights).sum(dim=1) / denom).cpu())
    rows = torch.cat(pooled).numpy().astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ExtractionError(f"encoding failure at line {zero[0] + 1}: zero vector")
    return (rows / norms[:, None]).astype(np.float32)


def extract(job: ExtractionJob) -> list:
    """Encode every language of the job; returns the written file paths."""
    texts = read_corpus(job)
    tokenizer, model = load_encoder(job.model_ref)
    Path(job.out_dir).mkdir(parents=True, exist_ok=True)
    written = []
    for lang in job.languages:
        rows = encode_sentences(texts[lang], tokenizer, model, job.batch_size,
                                job.max_len, job.include_special)
        path = output_path(job, lang)
        write_xemb(path, job.model_ref, lang, rows, normalized=True)
        written.append(path)
    return written


@dataclass
class AlignmentReport:
    ok: bool
    rows: list = field(default_factory=list)    # (file, model, lang, n, d, crc)
    failures: list = field(default_factory=list)


def verify_alignment(directory: str | Path, languages: list | None = None) -> AlignmentReport:
    """Check that produced files agree on (n, d) per model; list checksums."""
    paths = sorted(Path(directory).glob("*.xemb"))
    report = AlignmentReport(ok=True)
    if not paths:
        report.ok = False
        report.failures.append(f"{directory}: no .xemb files")
        return report
    headers = []
    for path in paths:
        try:
            h = read_header(path)
        except ValueError as exc:
            report.ok = False
            report.failures.append(str(exc))
            continue
        if languages and h.language_id not in languages:
            continue
        headers.append((path, h))
        report.rows.append((path.name, h.model_id, h.language_id, h.n, h.d,
                            f"{h.payload_crc:08x}"))
    if languages:
        found = {h.language_id for _, h in headers}
        for lang in languages:
            if lang not in found:
                report.ok = False
                report.failures.append(f"no file for language {lang!r}")
    by_model: dict = {}
    for path, h in headers:
        by_model.setdefault(h.model_id, []).append((path, h))
    for model, items in sorted(by_model.items()):
        shapes = {(h.n, h.d) for _, h in items}
        if len(shapes) > 1:
            report.ok = False
            detail = ", ".join(f"{p.name}={h.n}x{h.d}" for p, h in items)
            report.failures.append(f"model {model}: inconsistent shapes ({detail})")
    return report
