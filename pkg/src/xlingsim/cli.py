"""Command-line interface: validate | compute-metrics | correlate | select | report.

Configuration comes from an optional flat key=value file plus CLI flags;
flags win. Exit codes: 0 success, 1 validation/analysis failure, 2 bad
arguments. Given identical inputs, flags, and seed, every command writes
byte-identical output files.
"""

from __future__ import annotations

import re
import sys
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import click

from . import analysis, report as rpt, selection as sel
from .errors import ToolkitError
from .metrics import METRICS, all_metrics, gram_stats, load_metrics_csv, write_metrics_csv
from .ranking import DEFAULT_SEED
from .store import (
    load_coverage_csv,
    load_embeddings,
    load_transfer_csv,
    load_uriel_csv,
)


@dataclass
class RunConfig:
    embeddings_dir: Path | None = None
    transfer: Path | None = None
    uriel: Path | None = None
    coverage: Path | None = None
    models: list = field(default_factory=list)
    tasks: list = field(default_factory=list)
    metrics: list = field(default_factory=lambda: list(METRICS))
    k: int = 10
    out: Path | None = None
    seed: int = DEFAULT_SEED
    allow_pooled: bool = False

    def check(self) -> None:
        for name in ("embeddings_dir", "transfer", "uriel", "coverage"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise click.UsageError(f"{name.replace('_', '-')}: no such path {p}")
        unknown = [m for m in self.metrics if m not in METRICS]
        if unknown:
            raise click.UsageError(f"unknown metrics {unknown}; choose from {list(METRICS)}")
        if self.k < 1:
            raise click.UsageError("k must be >= 1")


_LIST_KEYS = {"models", "tasks", "metrics"}
_PATH_KEYS = {"embeddings_dir", "transfer", "uriel", "coverage", "out"}
_INT_KEYS = {"k", "seed"}
_BOOL_KEYS = {"allow_pooled"}


def parse_config_file(path: Path) -> dict:
    """Flat key=value lines; # starts a comment; lists are comma-separated."""
    values = {}
    for ln, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path} line {ln}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if key in _LIST_KEYS:
            values[key] = [v.strip() for v in value.split(",") if v.strip()]
        elif key in _PATH_KEYS:
            values[key] = Path(value)
        elif key in _INT_KEYS:
            try:
                values[key] = int(value, 0)
            except ValueError:
                raise click.UsageError(f"{path} line {ln}: {key} must be an integer")
        elif key in _BOOL_KEYS:
            if value not in ("true", "false"):
                raise click.UsageError(f"{path} line {ln}: {key} must be true or false")
            values[key] = value == "true"
        else:
            raise click.UsageError(f"{path} line {ln}: unknown key {key!r}")
    return values


def build_config(config_file, **flags) -> RunConfig:
    cfg = RunConfig()
    file_values = parse_config_file(Path(config_file)) if config_file else {}
    for f in fields(RunConfig):
        if f.name in file_values:
            setattr(cfg, f.name, file_values[f.name])
    for name, value in flags.items():
        if value in (None, (), []):
            continue
        if name in _LIST_KEYS and isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if name in _PATH_KEYS:
            value = Path(value)
        setattr(cfg, name, value)
    cfg.check()
    return cfg


def shared_options(fn):
    opts = [
        click.option("--config", "config_file", type=click.Path(exists=True),
                     default=None, help="Flat key=value config file; flags override."),
        click.option("--embeddings-dir", default=None,
                     help="Directory of .xemb embedding files."),
        click.option("--transfer", default=None, help="Transfer scores CSV."),
        click.option("--uriel", default=None, help="Typological distances CSV."),
        click.option("--coverage", default=None, help="Pretraining coverage CSV."),
        click.option("--models", default=None,
                     help="Comma-separated model ids to include."),
        click.option("--tasks", default=None,
                     help="Comma-separated tasks to include (NER,POS,SENT)."),
        click.option("--metrics", default=None,
                     help=f"Comma-separated metric names from {','.join(METRICS)}."),
        click.option("--k", type=int, default=None,
                     help="CSLS neighborhood size (default 10)."),
        click.option("--out", default=None, help="Output directory."),
        click.option("--seed", type=int, default=None,
                     help="Seed for permutation p-values (default 0x5EED)."),
        click.option("--allow-pooled", is_flag=True, default=None,
                     help="Also report the fully pooled correlation (see warning)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _out_dir(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise click.UsageError("--out is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def scan_embeddings(root: Path, models: list) -> dict:
    """Index .xemb files under root by (model, language) from their headers."""
    index = {}
    for path in sorted(root.glob("*.xemb")):
        m = load_embeddings(path)
        key = (m.model_id, m.language_id)
        if key in index:
            raise ToolkitError(f"duplicate embedding for {key}: {path}")
        index[key] = m
    if models:
        index = {k: v for k, v in index.items() if k[0] in models}
        for model in models:
            if not any(k[0] == model for k in index):
                raise ToolkitError(f"missing embedding files for model {model!r}")
    return index


@click.group()
def main():
    """Predict cross-lingual transfer sources from embedding similarity."""


# ---------------------------------------------------------------------------


@main.command("validate")
@shared_options
def cmd_validate(config_file, **flags):
    """Load every input, re-check invariants, and report row counts."""
    cfg = build_config(config_file, **flags)
    failures = []
    counts = []

    embeddings = {}
    if cfg.embeddings_dir:
        paths = sorted(Path(cfg.embeddings_dir).glob("*.xemb"))
        if not paths:
            failures.append(f"{cfg.embeddings_dir}: no .xemb files")
        for path in paths:
            try:
                m = load_embeddings(path)
                embeddings[(m.model_id, m.language_id)] = m
                counts.append(f"{path.name}: {m.model_id}/{m.language_id} "
                              f"n={m.n_sentences} d={m.dim} "
                              f"normalized={str(m.normalized).lower()}")
            except ToolkitError as e:
                failures.append(str(e))

    transfers = []
    if cfg.transfer:
        try:
            transfers = load_transfer_csv(cfg.transfer)
            counts.append(f"{cfg.transfer}: {len(transfers)} transfer records")
        except ToolkitError as e:
            failures.append(str(e))
    if cfg.uriel:
        try:
            counts.append(f"{cfg.uriel}: {len(load_uriel_csv(cfg.uriel))} distance records")
        except ToolkitError as e:
            failures.append(str(e))
    if cfg.coverage:
        try:
            cov = load_coverage_csv(cfg.coverage)
            counts.append(f"{cfg.coverage}: {len(cov.entries)} coverage entries")
        except ToolkitError as e:
            failures.append(str(e))

    if embeddings and transfers:
        joined = sum(1 for t in transfers
                     if (t.model_id, t.source) in embeddings
                     and (t.model_id, t.target) in embeddings)
        counts.append(f"transfer rows with embeddings for both languages: "
                      f"{joined}/{len(transfers)}")
        if joined == 0:
            failures.append("no transfer row has embeddings for both its languages")

    for line in counts:
        click.echo(line)
    if failures:
        for line in failures:
            click.echo(f"FAIL: {line}", err=True)
        sys.exit(1)
    click.echo("OK")


# ---------------------------------------------------------------------------


@main.command("compute-metrics")
@shared_options
def cmd_compute_metrics(config_file, **flags):
    """Compute all metrics for every ordered language pair per model."""
    cfg = build_config(config_file, **flags)
    if not cfg.embeddings_dir:
        raise click.UsageError("--embeddings-dir is required")
    out = _out_dir(cfg)
    try:
        records = compute_metric_records(cfg)
    except ToolkitError as e:
        fail(str(e))
    path = out / "metrics.csv"
    write_metrics_csv(records, path)
    click.echo(f"wrote {len(records)} metric rows to {path}")


def compute_metric_records(cfg: RunConfig) -> list:
    index = scan_embeddings(Path(cfg.embeddings_dir), cfg.models)
    if not index:
        raise ToolkitError("no embeddings found")
    by_model: dict = {}
    for (model, lang), m in index.items():
        by_model.setdefault(model, {})[lang] = m
    records = []
    for model in sorted(by_model):
        langs = sorted(by_model[model])
        if len(langs) < 2:
            raise ToolkitError(f"model {model!r}: fewer than 2 languages "
                               f"({langs}); nothing to pair")
        grams = {lang: gram_stats(by_model[model][lang]) for lang in langs}
        for src in langs:
            for tgt in langs:
                if src == tgt:
                    continue
                records.extend(all_metrics(
                    by_model[model][src], by_model[model][tgt], k=cfg.k,
                    cka_stats=(grams[src], grams[tgt])))
    wanted = set(cfg.metrics)
    return [r for r in records if r.metric in wanted]


# ---------------------------------------------------------------------------


def _load_inputs_for_analysis(cfg: RunConfig, metrics_csv, use_fixture: bool):
    """Resolve (metric records, transfer records) from fixture, CSV, or embeddings."""
    if use_fixture:
        records = load_metrics_csv(analysis.fixture_path("simpson_ner_metrics.csv"))
        transfers = load_transfer_csv(analysis.fixture_path("simpson_ner_transfer.csv"))
    else:
        if metrics_csv:
            records = load_metrics_csv(metrics_csv)
        elif cfg.embeddings_dir:
            records = compute_metric_records(cfg)
        else:
            raise click.UsageError(
                "need --fixture, --metrics-csv, or --embeddings-dir")
        if not cfg.transfer:
            raise click.UsageError("--transfer is required without --fixture")
        transfers = load_transfer_csv(cfg.transfer)
    if cfg.models:
        records = [r for r in records if r.model_id in cfg.models]
        transfers = [t for t in transfers if t.model_id in cfg.models]
    if cfg.tasks:
        transfers = [t for t in transfers if t.task in cfg.tasks]
    return records, transfers


@main.command("correlate")
@shared_options
@click.option("--metrics-csv", default=None,
              help="Precomputed metric records (output of compute-metrics).")
@click.option("--fixture", "use_fixture", is_flag=True, default=False,
              help="Run on the bundled reference fixtures.")
def cmd_correlate(config_file, metrics_csv, use_fixture, **flags):
    """Correlate metrics with transfer scores at every stratification level."""
    cfg = build_config(config_file, **flags)
    out = _out_dir(cfg)
    try:
        run_correlate(cfg, out, metrics_csv, use_fixture)
    except ToolkitError as e:
        fail(str(e))


def run_correlate(cfg: RunConfig, out: Path, metrics_csv, use_fixture: bool) -> None:
    text_sections = []
    records, transfers = _load_inputs_for_analysis(cfg, metrics_csv, use_fixture)

    metric_names = [m for m in cfg.metrics
                    if any(r.metric == m for r in records)]
    if not metric_names:
        raise ToolkitError("no requested metric present in the records")

    # Per-stratum correlations from raw data.
    stratified: dict = {}
    conditions: list = []
    joins: dict = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for metric in metric_names:
            jr = analysis.join(records, transfers, metric)
            joins[metric] = jr
            results = analysis.correlate_stratified(
                jr.pairs, "per_model_task", seed=cfg.seed)
            stratified[metric] = results
            conditions.extend(analysis.conditions_from_results(results, metric))
            if cfg.allow_pooled:
                stratified[metric] = results + analysis.correlate_stratified(
                    jr.pairs, "fully_pooled", allow_pooled=True, seed=cfg.seed)
    for w in caught:
        click.echo(f"note: {w.message}")
    if not cfg.allow_pooled:
        click.echo(f"note: fully pooled correlation omitted; {analysis.POOLING_WARNING}")
    for metric in metric_names:
        click.echo(f"join[{metric}]: {len(joins[metric].pairs)} pairs, "
                   f"{joins[metric].note}")

    rpt.write_csv(out / "results.csv",
                  ["stratum_model", "stratum_task", "metric", "rho", "p", "n", "stars"],
                  rpt.results_csv_rows(stratified))

    # In fixture mode the per-condition table comes from the bundled fixture,
    # which carries the full metric x task grid; raw runs use computed rows.
    if use_fixture:
        conditions = analysis.bundled_conditions()
        if cfg.models:
            conditions = [c for c in conditions if c.model in cfg.models]
        if cfg.tasks:
            conditions = [c for c in conditions if c.task in cfg.tasks]
        rpt.write_csv(out / "conditions.csv",
                      ["task", "model", "metric", "rho", "stars"],
                      [[c.task, c.model, c.metric, f"{c.rho:.6f}", c.stars]
                       for c in conditions])

    for task in sorted({c.task for c in conditions}):
        headers, body = rpt.per_task_table(conditions, task)
        _emit(out, f"per_task_{task}", headers, body, text_sections,
              f"Correlations with transfer on {task} (per model)")

    headers, body = rpt.summary_table(analysis.aggregate_conditions(conditions))
    _emit(out, "condition_summary", headers, body, text_sections,
          "Cross-condition summary per metric")

    task_set = {c.task for c in conditions}
    if task_set == set(analysis.TASKS):
        headers, body = rpt.domain_table(analysis.domain_effect(conditions))
        _emit(out, "domain_effect", headers, body, text_sections,
              "Formal-text vs social-media correlation means")
    missing_grid = False
    try:
        headers, body = rpt.model_table(analysis.model_summary(conditions))
    except ToolkitError as e:
        missing_grid = True
        click.echo(f"note: model summary skipped ({e})")
    if not missing_grid:
        _emit(out, "model_summary", headers, body, text_sections,
              "Per-model correlation summary")

    # Pooling-reversal report per (task, metric) with enough groups.
    for metric in metric_names:
        by_task: dict = {}
        for p in joins[metric].pairs:
            by_task.setdefault(p.task, []).append(p)
        for task in sorted(by_task):
            pairs = by_task[task]
            if len({p.model for p in pairs}) < 2:
                continue
            try:
                finding = analysis.detect_simpson(pairs, seed=cfg.seed)
            except ToolkitError as e:
                click.echo(f"note: pooling report for {task}/{metric} skipped ({e})")
                continue
            (headers, rows), text = rpt.simpson_tables(finding, metric)
            stem = f"simpson_{task}_{metric}"
            rpt.write_csv(out / f"{stem}.csv", headers, rows)
            rpt.write_csv(out / f"{stem}_points.csv",
                          ["model", "source", "target", "metric_value", "score"],
                          rpt.simpson_points_rows(pairs))
            text_sections.append(text)

    if len(metric_names) >= 2:
        names, mat = analysis.inter_metric_correlation(records, seed=cfg.seed)
        rpt.write_csv(out / "inter_metric.csv", ["metric_a", "metric_b", "rho"],
                      rpt.inter_metric_rows(names, mat))

    if cfg.coverage or use_fixture:
        coverage = load_coverage_csv(
            cfg.coverage if cfg.coverage else analysis.fixture_path("coverage.csv"))
        for metric in metric_names:
            if metric != "cosine_gap":
                continue
            by_task = {}
            for p in joins[metric].pairs:
                by_task.setdefault(p.task, []).append(p)
            for task in sorted(by_task):
                try:
                    strata = analysis.pretraining_stratified(by_task[task], coverage,
                                                             seed=cfg.seed)
                except ToolkitError as e:
                    click.echo(f"note: pretraining report for {task} skipped ({e})")
                    continue
                headers, body = rpt.pretraining_table(strata)
                rpt.write_csv(out / f"pretraining_{task}.csv", headers, body)
                headers, body = rpt.pretraining_display(strata)
                text_sections.append(
                    f"Correlation by target pretraining status ({task}, {metric})\n"
                    + rpt.text_table(headers, body))

    if cfg.uriel or use_fixture:
        uriel = load_uriel_csv(
            cfg.uriel if cfg.uriel else analysis.fixture_path("uriel_genetic.csv"))
        kinds = sorted({u.kind for u in uriel})
        rows, notes = analysis.uriel_comparison(
            records, transfers, uriel, kinds=kinds,
            metric_names=[m for m in metric_names], seed=cfg.seed)
        rpt.write_csv(out / "uriel_comparison.csv",
                      ["task", "feature", "model", "abs_rho", "rho", "winner"],
                      rpt.uriel_csv_rows(rows))
        for task in sorted({r.task for r in rows}):
            headers, body = rpt.uriel_table(rows, task)
            text_sections.append(
                f"Embedding metrics vs typological distances on {task} "
                f"(|rho|, * = per-model winner)\n" + rpt.text_table(headers, body))
        for note in notes:
            click.echo(f"note: {note}")

    (out / "report.txt").write_text("\n".join(text_sections), encoding="utf-8")
    click.echo(f"wrote correlation reports to {out}")


def _emit(out: Path, stem: str, headers, body, text_sections: list, title: str):
    rpt.write_csv(out / f"{stem}.csv", headers, body)
    (out / f"{stem}.md").write_text(rpt.markdown_table(headers, body),
                                    encoding="utf-8")
    text_sections.append(f"{title}\n" + rpt.text_table(headers, body))


# ---------------------------------------------------------------------------


@main.command("select")
@shared_options
@click.option("--metrics-csv", default=None,
              help="Precomputed metric records (output of compute-metrics).")
@click.option("--fixture", "use_fixture", is_flag=True, default=False,
              help="Run on the bundled reference fixtures.")
@click.option("--metric", "selection_metric", default=sel.DEFAULT_SELECTION_METRIC,
              show_default=True, help="Metric to rank candidate sources by.")
@click.option("--target", default=None,
              help="Only report the ranking for this target language.")
@click.option("--topk", default="1,3", show_default=True,
              help="Comma-separated K values for top-K accuracy.")
def cmd_select(config_file, metrics_csv, use_fixture, selection_metric, target,
               topk, **flags):
    """Rank candidate source languages per target and score against the oracle."""
    cfg = build_config(config_file, **flags)
    out = _out_dir(cfg)
    try:
        k_list = sorted({int(v) for v in topk.split(",") if v.strip()})
    except ValueError:
        raise click.UsageError(f"bad --topk value {topk!r}")
    if not k_list:
        raise click.UsageError("--topk needs at least one K")
    try:
        run_select(cfg, out, metrics_csv, use_fixture, selection_metric, target, k_list)
    except ToolkitError as e:
        fail(str(e))


def run_select(cfg: RunConfig, out: Path, metrics_csv, use_fixture: bool,
               selection_metric: str, target, k_list) -> None:
    records, transfers = _load_inputs_for_analysis(cfg, metrics_csv, use_fixture)
    if target is not None:
        known = {t.target for t in transfers}
        if target not in known:
            raise ToolkitError(f"unknown target {target!r}; have {sorted(known)}")
        transfers = [t for t in transfers if t.target == target]

    slices = sorted({(t.task, t.model_id) for t in transfers})
    reports = []
    for task, model in slices:
        reports.append(sel.build_selection_report(
            records, transfers, selection_metric, k_list, model=model, task=task))

    rows = []
    for rep in reports:
        rows.extend(rpt.selection_csv_rows(rep))
    rpt.write_csv(out / "selection.csv",
                  ["model", "task", "target", "rank", "source", "metric_value",
                   "is_oracle_best"], rows)
    headers, body = rpt.selection_summary_rows(reports, k_list)
    rpt.write_csv(out / "selection_summary.csv", headers, body)
    headers, body = rpt.selection_summary_display(reports, k_list)
    text = (f"Source-selection accuracy by {selection_metric} "
            f"(oracle = best observed transfer)\n" + rpt.text_table(headers, body))
    (out / "selection_summary.md").write_text(
        rpt.markdown_table(headers, body), encoding="utf-8")
    (out / "selection_report.txt").write_text(text, encoding="utf-8")
    click.echo(text)
    for rep in reports:
        for note in rep.notes:
            click.echo(f"note: {rep.task}/{rep.model}: {note}")
    click.echo(f"wrote selection reports to {out}")


# ---------------------------------------------------------------------------


@main.command("report")
@shared_options
@click.option("--metrics-csv", default=None,
              help="Precomputed metric records (output of compute-metrics).")
@click.option("--fixture", "use_fixture", is_flag=True, default=False,
              help="Run on the bundled reference fixtures.")
@click.option("--metric", "selection_metric", default=sel.DEFAULT_SELECTION_METRIC,
              show_default=True, help="Metric to rank candidate sources by.")
@click.option("--topk", default="1,3", show_default=True,
              help="Comma-separated K values for top-K accuracy.")
def cmd_report(config_file, metrics_csv, use_fixture, selection_metric, topk, **flags):
    """Full pipeline: correlations plus selection reports in one run."""
    cfg = build_config(config_file, **flags)
    out = _out_dir(cfg)
    try:
        k_list = sorted({int(v) for v in topk.split(",") if v.strip()})
    except ValueError:
        raise click.UsageError(f"bad --topk value {topk!r}")
    if not k_list:
        raise click.UsageError("--topk needs at least one K")
    try:
        run_correlate(cfg, out, metrics_csv, use_fixture)
        run_select(cfg, out, metrics_csv, use_fixture, selection_metric, None, k_list)
    except ToolkitError as e:
        fail(str(e))


if __name__ == "__main__":
    main()
