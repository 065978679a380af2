"""Deterministic rendering of analysis results as CSV, markdown, and text.

Every rendered table cell is backed by a row in some emitted CSV; rendering
never computes anything the CSVs do not carry. Output is byte-stable: fixed
float formats, sorted iteration, LF newlines, no timestamps.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path


# display order for metric rows; anything unknown sorts after, alphabetically
_METRIC_ORDER = ("cosine_mean", "cosine_gap", "p_at_1", "p_at_1_st", "p_at_1_ts",
                 "csls", "cka")


def metric_sort_key(name: str):
    try:
        return (0, _METRIC_ORDER.index(name))
    except ValueError:
        return (1, name)


def fmt_rho(v: float) -> str:
    return f"{v:.2f}"


def fmt_mean3(v: float) -> str:
    return f"{v:.3f}"


def markdown_table(headers: list, rows: list) -> str:
    out = ["| " + " | ".join(headers) + " |",
           "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        out.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(out) + "\n"


def text_table(headers: list, rows: list) -> str:
    cells = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, headers: list, rows: list) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    for row in rows:
        w.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def results_csv_rows(stratified: dict) -> list:
    """Flatten {metric: [(Stratum, CorrelationResult)]} into results rows."""
    from .ranking import stars
    rows = []
    for metric in sorted(stratified):
        for st, r in stratified[metric]:
            rows.append([st.model or "", st.task or "", metric,
                         f"{r.rho:.6f}", f"{r.p_value:.3e}", r.n, stars(r.p_value)])
    rows.sort(key=lambda r: (r[1], r[0], r[2]))
    return rows


def per_task_table(conditions: list, task: str):
    """Metric x model grid of starred rho strings for one task."""
    rows = [c for c in conditions if c.task == task]
    models = sorted({c.model for c in rows})
    metrics = sorted({c.metric for c in rows}, key=metric_sort_key)
    cell = {(c.metric, c.model): fmt_rho(c.rho) + c.stars for c in rows}
    body = [[m] + [cell.get((m, mod), "") for mod in models] for m in metrics]
    return ["metric"] + models, body


def summary_table(summaries: list):
    headers = ["metric", "mean", "std", "min", "max", "sig"]
    body = [[s.metric, fmt_rho(s.mean), fmt_rho(s.std), fmt_rho(s.min),
             fmt_rho(s.max), f"{s.n_significant}/{s.n_conditions}"]
            for s in sorted(summaries, key=lambda s: metric_sort_key(s.metric))]
    return headers, body


def domain_table(effects: list):
    headers = ["metric", "formal", "twitter", "delta"]
    body = [[e.metric, fmt_rho(e.formal_mean), fmt_rho(e.twitter_mean),
             fmt_rho(e.delta)]
            for e in sorted(effects, key=lambda e: metric_sort_key(e.metric))]
    return headers, body


def model_table(summaries: list):
    headers = ["model", "mean", "best", "worst"]
    body = [[s.model, fmt_rho(s.mean), fmt_rho(s.best), fmt_rho(s.worst)]
            for s in sorted(summaries, key=lambda s: (-s.mean, s.model))]
    return headers, body


def simpson_tables(finding, metric: str):
    """(csv rows, text block) for one pooling-reversal report."""
    from .ranking import stars
    headers = ["group", "rho", "p", "n", "mean_metric", "mean_score"]
    rows = [["pooled", f"{finding.pooled.rho:.6f}",
             f"{finding.pooled.p_value:.3e}", finding.pooled.n, "", ""]]
    for gid in sorted(finding.per_group):
        r = finding.per_group[gid]
        gm = finding.group_means[gid]
        rows.append([gid, f"{r.rho:.6f}", f"{r.p_value:.3e}", r.n,
                     f"{gm.metric_mean:.6f}", f"{gm.score_mean:.6f}"])

    lines = [f"Pooled vs per-group correlation ({metric})",
             f"  pooled: rho {fmt_rho(finding.pooled.rho)}"
             f"{stars(finding.pooled.p_value)} (n={finding.pooled.n})"]
    for gid in sorted(finding.per_group):
        r = finding.per_group[gid]
        gm = finding.group_means[gid]
        sign = "+" if r.rho >= 0 else ""
        lines.append(f"  {gid}: rho {sign}{fmt_rho(r.rho)}{stars(r.p_value)} "
                     f"(n={r.n}, mean metric {fmt_mean3(gm.metric_mean)}, "
                     f"mean score {gm.score_mean:.2f})")
    if finding.reversed:
        lines.append("  sign reversal detected: pooled and per-group correlations "
                     "disagree (Simpson's paradox); report per-group numbers only")
    else:
        lines.append("  no sign reversal between pooled and per-group correlations")
    return (headers, rows), "\n".join(lines) + "\n"


def simpson_points_rows(pairs: list) -> list:
    """Scatter data backing the pooling-reversal figure."""
    rows = [[p.model, p.source, p.target, f"{p.metric_value:.6f}", f"{p.score:.6f}"]
            for p in pairs]
    rows.sort()
    return rows


def pretraining_table(strata: dict):
    headers = ["model", "stratum", "rho", "stars", "p", "n", "mean_score", "note"]
    from .ranking import stars
    body = []
    for model in sorted(strata):
        for side in ("seen", "unseen"):
            s = strata[model][side]
            if s.result is None:
                body.append([model, side, "", "", "", s.n,
                             "" if s.mean_score is None else f"{s.mean_score:.6f}",
                             s.note])
            else:
                body.append([model, side, f"{s.result.rho:.6f}",
                             stars(s.result.p_value), f"{s.result.p_value:.3e}",
                             s.n, f"{s.mean_score:.6f}", s.note])
    return headers, body


def pretraining_display(strata: dict):
    headers = ["model", "seen rho", "seen n", "seen mean", "unseen rho",
               "unseen n", "unseen mean"]
    from .ranking import stars
    body = []
    for model in sorted(strata):
        row = [model]
        for side in ("seen", "unseen"):
            s = strata[model][side]
            if s.result is None:
                row += ["--", s.n or "--",
                        "--" if s.mean_score is None else f"{s.mean_score:.2f}"]
            else:
                row += [fmt_rho(s.result.rho) + stars(s.result.p_value), s.n,
                        f"{s.mean_score:.2f}"]
        body.append(row)
    return headers, body


def uriel_table(rows: list, task: str):
    """Table of |rho| per model with the per-model winner marked."""
    t_rows = [r for r in rows if r.task == task]
    models = sorted({m for r in t_rows for m in r.abs_rho})
    headers = ["feature"] + models
    body = []
    for r in t_rows:
        cells = [r.feature]
        for m in models:
            if m not in r.abs_rho:
                cells.append("")
                continue
            mark = "*" if m in r.winner_models else ""
            cells.append(fmt_rho(r.abs_rho[m]) + mark)
        body.append(cells)
    return headers, body


def uriel_csv_rows(rows: list) -> list:
    out = []
    for r in rows:
        for model in sorted(r.abs_rho):
            out.append([r.task, r.feature, model, f"{r.abs_rho[model]:.6f}",
                        f"{r.signed_rho[model]:.6f}",
                        "true" if model in r.winner_models else "false"])
    out.sort()
    return out


def inter_metric_rows(names: list, mat) -> list:
    import math
    rows = []
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if i < j:
                cell = "" if math.isnan(mat[i, j]) else f"{mat[i, j]:.6f}"
                rows.append([a, b, cell])
    return rows


def selection_csv_rows(report) -> list:
    rows = []
    for d in report.targets:
        oracle = set(d.oracle_sources)
        for r in d.ranking:
            rows.append([report.model, report.task, d.target, r.rank, r.source,
                         f"{r.value:.6f}", "true" if r.source in oracle else "false"])
    return rows


def selection_summary_rows(reports: list, k_list) -> tuple:
    headers = (["task", "model", "metric", "n_languages"]
               + [f"top{k}" for k in k_list] + [f"rand{k}" for k in k_list])
    body = []
    for rep in reports:
        acc = {t.k: t.accuracy for t in rep.top_k}
        row = [rep.task, rep.model, rep.metric, rep.n_languages]
        row += [f"{acc[k]:.6f}" for k in k_list]
        row += [f"{rep.baselines[k]:.6f}" for k in k_list]
        body.append(row)
    body.sort(key=lambda r: (r[0], r[1]))
    return headers, body


def selection_summary_display(reports: list, k_list) -> tuple:
    headers = (["task", "model"] + [f"Top-{k}" for k in k_list]
               + [f"Rand-{k}" for k in k_list] + ["note"])
    body = []
    for rep in reports:
        acc = {t.k: t.accuracy for t in rep.top_k}
        row = [rep.task, rep.model]
        row += [f"{100 * acc[k]:.0f}%" for k in k_list]
        row += [f"{100 * rep.baselines[k]:.0f}%" for k in k_list]
        below = [k for k in k_list if acc[k] < rep.baselines[k]]
        note = ("below random baseline at K="
                + ",".join(str(k) for k in below)) if below else ""
        row.append(note)
        body.append(row)
    body.sort(key=lambda r: (r[0], r[1]))
    return headers, body
