"""Source-language ranking per target and oracle-based top-K evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AnalysisError, ValidationError

DEFAULT_SELECTION_METRIC = "cosine_gap"


@dataclass(frozen=True)
class RankedSource:
    rank: int
    source: str
    value: float
    tied: bool


def rank_sources(metrics: list, target: str, metric: str,
                 model: str | None = None) -> list:
    """Candidate sources for a target, best metric value first.

    Ties break alphabetically by language code and are flagged. Records must
    belong to a single model; pass model to slice a mixed list.
    """
    cands = [m for m in metrics
             if m.metric == metric and m.target == target
             and (model is None or m.model_id == model)]
    if not cands:
        raise AnalysisError(f"no candidate sources for target {target!r} "
                            f"under metric {metric!r}")
    models = {m.model_id for m in cands}
    if len(models) > 1:
        raise AnalysisError(f"candidates span several models {sorted(models)}; "
                            f"pass model= to disambiguate")
    cands.sort(key=lambda m: (-m.value, m.source))
    out = []
    for i, m in enumerate(cands):
        tied = ((i > 0 and cands[i - 1].value == m.value)
                or (i + 1 < len(cands) and cands[i + 1].value == m.value))
        out.append(RankedSource(i + 1, m.source, m.value, tied))
    return out


def random_baseline(n_languages: int, k: int) -> float:
    """Chance of hitting the oracle source in K random picks: K/(N-1)."""
    if n_languages < 2:
        raise ValidationError("need at least 2 languages")
    if not 1 <= k <= n_languages - 1:
        raise ValidationError(f"K={k} out of range [1, {n_languages - 1}]")
    return k / (n_languages - 1)


@dataclass(frozen=True)
class TargetDetail:
    target: str
    ranking: list                # RankedSource rows
    oracle_sources: tuple        # all transfer-score argmax sources (ties kept)
    oracle_tied: bool
    rank_of_oracle: int          # best rank among oracle sources


@dataclass(frozen=True)
class TopKResult:
    k: int
    accuracy: float
    hits: int
    n_targets: int


@dataclass(frozen=True)
class SelectionReport:
    model: str
    task: str
    metric: str
    n_languages: int
    targets: list                # TargetDetail rows
    top_k: list                  # TopKResult rows
    baselines: dict              # k -> K/(N-1)
    notes: list = field(default_factory=list)


def top_k_accuracy(metrics: list, transfers: list, metric: str, k: int,
                   model: str | None = None, task: str | None = None):
    """Fraction of targets whose empirically best source lands in the top K.

    The oracle is the transfer-score argmax per target; when several sources
    tie for best, retrieving any of them counts as a hit (lenient reading,
    flagged per target). Targets lacking transfer data or metric candidates
    are excluded and noted.
    """
    report = build_selection_report(metrics, transfers, metric, [k],
                                    model=model, task=task)
    return report.top_k[0].accuracy, report.targets, report.notes


def build_selection_report(metrics: list, transfers: list,
                           metric: str = DEFAULT_SELECTION_METRIC,
                           k_list=(1, 3), model: str | None = None,
                           task: str | None = None) -> SelectionReport:
    """Rank sources for every target of one (model, task) and score top-K hits."""
    t_rows = [t for t in transfers
              if (model is None or t.model_id == model)
              and (task is None or t.task == task)]
    if not t_rows:
        raise AnalysisError("no transfer records for the requested slice")
    models = {t.model_id for t in t_rows}
    tasks = {t.task for t in t_rows}
    if len(models) > 1 or len(tasks) > 1:
        raise AnalysisError(f"selection needs one (model, task) slice, got "
                            f"{sorted(models)} x {sorted(tasks)}")
    the_model, the_task = models.pop(), tasks.pop()

    langs = sorted({t.source for t in t_rows} | {t.target for t in t_rows})
    n_langs = len(langs)
    k_list = sorted(set(k_list))
    for k in k_list:
        if not 1 <= k <= n_langs - 1:
            raise ValidationError(f"K={k} out of range [1, {n_langs - 1}]")

    scores: dict = {}
    for t in t_rows:
        scores.setdefault(t.target, {})[t.source] = t.score

    # candidate sources are the task's other N-1 languages; metric records
    # covering languages outside the task must not inflate the rankings
    relevant = [m for m in metrics
                if m.metric == metric and m.model_id == the_model]
    in_task = [m for m in relevant if m.source in langs and m.target in langs]
    metric_targets = {m.target for m in in_task}
    notes = []
    if len(relevant) != len(in_task):
        notes.append(f"{len(relevant) - len(in_task)} metric rows outside the "
                     f"task's language set ignored")
    details = []
    for target in sorted(metric_targets | set(scores)):
        if target not in scores:
            notes.append(f"target {target}: no transfer data, excluded")
            continue
        if target not in metric_targets:
            notes.append(f"target {target}: no metric candidates, excluded")
            continue
        ranking = rank_sources(in_task, target, metric, model=the_model)
        per_source = scores[target]
        best = max(per_source.values())
        oracle = tuple(sorted(s for s, v in per_source.items() if v == best))
        ranks = [r.rank for r in ranking if r.source in oracle]
        details.append(TargetDetail(target, ranking, oracle, len(oracle) > 1,
                                    min(ranks) if ranks else n_langs))
    if not details:
        raise AnalysisError("no evaluable targets")
    if any(d.oracle_tied for d in details):
        notes.append("oracle ties present: any tied-best source counts as a hit")

    top_k = []
    for k in k_list:
        hits = sum(1 for d in details if d.rank_of_oracle <= k)
        top_k.append(TopKResult(k, hits / len(details), hits, len(details)))
    baselines = {k: random_baseline(n_langs, k) for k in k_list}
    return SelectionReport(the_model, the_task, metric, n_langs,
                           details, top_k, baselines, notes)
