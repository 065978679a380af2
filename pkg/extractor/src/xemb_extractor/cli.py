"""CLI: encode line-parallel corpora into xemb files and verify the output."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .extract import ExtractionError, ExtractionJob, extract, verify_alignment


@click.group()
def main():
    """Sentence-embedding extraction to the xemb interchange format."""


@main.command("extract")
@click.option("--model", required=True,
              help="Encoder reference: hub id or local model directory.")
@click.option("--corpus-dir", required=True, type=click.Path(exists=True),
              help="Directory holding one <lang>.txt per language, line-parallel.")
@click.option("--langs", required=True,
              help="Comma-separated language codes to encode.")
@click.option("--out", required=True, help="Output directory for .xemb files.")
@click.option("--batch", type=int, default=32, show_default=True,
              help="Sentences per inference batch.")
@click.option("--max-len", type=int, default=128, show_default=True,
              help="Token truncation length.")
@click.option("--include-special/--exclude-special", default=True,
              show_default=True,
              help="Pool over sequence-start/end tokens or mask them out.")
def cmd_extract(model, corpus_dir, langs, out, batch, max_len, include_special):
    """Encode each language file and write one embedding file per language."""
    languages = [code.strip() for code in langs.split(",") if code.strip()]
    job = ExtractionJob(model_ref=model, languages=languages,
                        corpus_dir=Path(corpus_dir), out_dir=Path(out),
                        batch_size=batch, max_len=max_len,
                        include_special=include_special)
    try:
        written = extract(job)
    except ExtractionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for path in written:
        click.echo(f"wrote {path}")


@main.command("verify")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True),
              help="Directory of .xemb files to check.")
@click.option("--langs", default=None,
              help="Comma-separated language codes that must all be present.")
def cmd_verify(directory, langs):
    """Assert consistent (n, d) per model and print per-file checksums."""
    languages = [c.strip() for c in langs.split(",") if c.strip()] if langs else None
    report = verify_alignment(directory, languages)
    for name, model, lang, n, d, crc in report.rows:
        click.echo(f"{name}: model={model} lang={lang} n={n} d={d} crc32={crc}")
    if not report.ok:
        for failure in report.failures:
            click.echo(f"FAIL: {failure}", err=True)
        sys.exit(1)
    click.echo("OK")


if __name__ == "__main__":
    main()
