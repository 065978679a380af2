"""Acceptance: extraction integrates with the consuming toolkit end to end."""

import hashlib
import subprocess
import sys

import numpy as np
import pytest

from xemb_extractor.extract import ExtractionJob, extract
from xemb_extractor.format import read_header, read_rows


def test_criterion_12_extractor_integration(tiny_model_dir, toy_corpus,
                                            tmp_path, capsys):
    """10-sentence corpus -> validated files, unit norms, stable checksums."""
    def run(out):
        job = ExtractionJob(model_ref=str(tiny_model_dir),
                            languages=["aaa", "bbb"], corpus_dir=toy_corpus,
                            out_dir=out, batch_size=4, max_len=16)
        return extract(job)

    written = run(tmp_path / "a")
    for path in written:
        header = read_header(path)
        assert header.n == 10                      # corpus line count
        assert header.d == 32                      # encoder hidden size
        norms = np.linalg.norm(read_rows(path).astype(np.float64), axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-4

    result = subprocess.run(
        [sys.executable, "-m", "xlingsim.cli", "validate",
         "--embeddings-dir", str(tmp_path / "a")],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stdout + result.stderr
    assert "OK" in result.stdout

    again = run(tmp_path / "b")
    digest = lambda paths: {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                            for p in paths}
    assert digest(written) == digest(again)

    with capsys.disabled():
        print("PASS criterion 12: extractor output validates, unit norms, "
              "stable checksums")
