"""Stratified correlation analyses joining metric values with transfer scores.

Correlations between a similarity metric and observed transfer performance
are computed per (model, task) stratum by default. Pooling across models is
deliberately hard to reach: between-model differences in embedding geometry
and attainable scores can reverse the sign of a pooled correlation even when
every within-model correlation is positive (Simpson's paradox), so the fully
pooled number is gated behind an explicit opt-in.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import AnalysisError, SchemaError, ValidationError
from .ranking import DEFAULT_SEED, CorrelationResult, spearman, stars
from .store import TASKS, CoverageTable

FORMAL_TASKS = ("NER", "POS")
TWITTER_TASKS = ("SENT",)


@dataclass(frozen=True)
class JoinedPair:
    """One (metric value, transfer score) observation with its stratum keys."""

    model: str
    task: str
    source: str
    target: str
    metric_value: float
    score: float


@dataclass(frozen=True)
class JoinResult:
    metric: str
    pairs: list
    unmatched_transfer: int
    unmatched_metric: int

    @property
    def note(self) -> str:
        total = self.unmatched_transfer + self.unmatched_metric
        if total == 0:
            return "all rows matched"
        return (f"{total} unmatched ({self.unmatched_transfer} transfer rows "
                f"without a metric, {self.unmatched_metric} metric rows without "
                f"a transfer score)")


@dataclass
class Stratum:
    """A fixed (model, task, extra) cell holding its joined observations."""

    model: str | None
    task: str | None
    extra: str | None = None
    pairs: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def label(self) -> str:
        parts = [self.model or "all-models", self.task or "all-tasks"]
        if self.extra:
            parts.append(self.extra)
        return "/".join(parts)

    def xy(self):
        xs = [p.metric_value for p in self.pairs]
        ys = [p.score for p in self.pairs]
        return xs, ys


def join(metrics: list, transfers: list, metric: str) -> JoinResult:
    """Inner join of one metric's records with transfer records.

    Keys on (model, source, target); a metric row may serve several tasks.
    Unmatched rows on either side are counted, never silently dropped.
    """
    selected = [m for m in metrics if m.metric == metric]
    if not selected:
        raise AnalysisError(f"metric {metric!r} not present in records")
    by_key = {}
    for m in selected:
        key = (m.model_id, m.source, m.target)
        if key in by_key:
            raise SchemaError(f"duplicate metric record for {key} / {metric}")
        by_key[key] = m
    pairs, matched_keys = [], set()
    unmatched_transfer = 0
    for t in transfers:
        key = (t.model_id, t.source, t.target)
        m = by_key.get(key)
        if m is None:
            unmatched_transfer += 1
            continue
        matched_keys.add(key)
        pairs.append(JoinedPair(t.model_id, t.task, t.source, t.target,
                                m.value, t.score))
    if not pairs:
        raise AnalysisError(f"no overlapping pairs between metric {metric!r} "
                            f"and transfer records")
    return JoinResult(metric, pairs, unmatched_transfer, len(by_key) - len(matched_keys))


STRATIFY_LEVELS = ("per_model_task", "per_task_pooled", "fully_pooled", "custom")

POOLING_WARNING = (
    "fully pooled correlation conflates model, task, and language effects "
    "and can reverse sign (Simpson's paradox); stratify per model instead")


def correlate_stratified(pairs: list, level: str = "per_model_task", *,
                         allow_pooled: bool = False, custom_key=None,
                         seed: int = DEFAULT_SEED) -> list:
    """One CorrelationResult per stratum at the requested granularity.

    Returns (Stratum, CorrelationResult) tuples in deterministic key order.
    Strata with fewer than 3 observations are skipped with a warning naming
    the stratum. level="fully_pooled" is refused unless allow_pooled is set.
    """
    if level not in STRATIFY_LEVELS:
        raise AnalysisError(f"unknown stratification level {level!r}")
    if level == "fully_pooled" and not allow_pooled:
        raise AnalysisError(f"refusing fully pooled correlation: {POOLING_WARNING}")
    if level == "custom" and custom_key is None:
        raise AnalysisError("custom level needs a custom_key function")

    strata: dict = {}
    for p in pairs:
        if level == "per_model_task":
            key = (p.model, p.task, None)
        elif level == "per_task_pooled":
            key = (None, p.task, None)
        elif level == "fully_pooled":
            key = (None, None, "pooled")
        else:
            key = (None, None, str(custom_key(p)))
        strata.setdefault(key, Stratum(*key)).pairs.append(p)

    out = []
    for key in sorted(strata, key=lambda k: tuple(x or "" for x in k)):
        st = strata[key]
        if st.n < 3:
            warnings.warn(f"stratum {st.label()}: n={st.n} < 3, skipped", stacklevel=2)
            continue
        try:
            out.append((st, spearman(*st.xy(), seed=seed)))
        except ValidationError as e:
            # e.g. a saturated metric (every P@1 = 1.0) has no rank variance
            warnings.warn(f"stratum {st.label()}: {e}, skipped", stacklevel=2)
    return out


# ---------------------------------------------------------------------------
# Simpson's paradox detection


@dataclass(frozen=True)
class GroupMeans:
    metric_mean: float
    score_mean: float
    n: int


@dataclass(frozen=True)
class SimpsonFinding:
    pooled: CorrelationResult
    per_group: dict
    group_means: dict
    reversed: bool


def detect_simpson(pairs: list, group_attr: str = "model",
                   seed: int = DEFAULT_SEED) -> SimpsonFinding:
    """Compare the pooled correlation against per-group correlations.

    reversed is true only when the pooled rho and every group rho carry
    strictly opposite signs and all of them are significant at 0.05. Group
    means of metric and score are reported because anti-ordered means are
    what drives the reversal.
    """
    groups: dict = {}
    for p in pairs:
        groups.setdefault(getattr(p, group_attr), []).append(p)
    if len(groups) < 2:
        raise AnalysisError("Simpson detection needs at least 2 groups")
    for gid, rows in groups.items():
        if len(rows) < 3:
            raise AnalysisError(f"group {gid}: n={len(rows)} < 3")

    xs = [p.metric_value for p in pairs]
    ys = [p.score for p in pairs]
    pooled = spearman(xs, ys, seed=seed)
    per_group, means = {}, {}
    for gid in sorted(groups):
        rows = groups[gid]
        per_group[gid] = spearman([p.metric_value for p in rows],
                                  [p.score for p in rows], seed=seed)
        means[gid] = GroupMeans(float(np.mean([p.metric_value for p in rows])),
                                float(np.mean([p.score for p in rows])),
                                len(rows))
    opposite = all(r.rho * pooled.rho < 0.0 for r in per_group.values())
    all_sig = pooled.significant and all(r.significant for r in per_group.values())
    return SimpsonFinding(pooled, per_group, means, opposite and all_sig)


# ---------------------------------------------------------------------------
# Cross-condition aggregation (one rho per model-task-metric condition)


@dataclass(frozen=True)
class ConditionRho:
    """One correlation outcome for a (task, model, metric) condition."""

    task: str
    model: str
    metric: str
    rho: float
    significant: bool
    stars: str = ""


def conditions_from_results(results: list, metric: str) -> list:
    """Adapt (Stratum, CorrelationResult) rows into condition records."""
    out = []
    for st, r in results:
        if st.model is None or st.task is None:
            continue
        out.append(ConditionRho(st.task, st.model, metric, r.rho,
                                r.significant, stars(r.p_value)))
    return out


def load_condition_csv(path: str | Path) -> list:
    """Load a conditions fixture; header task,model,metric,rho,stars."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        expected = ["task", "model", "metric", "rho", "stars"]
        if reader.fieldnames is None or sorted(reader.fieldnames) != sorted(expected):
            raise SchemaError(f"{path}: expected header {','.join(expected)}")
        out, seen = [], set()
        for line, row in enumerate(reader, start=2):
            task, model, metric = row["task"].strip(), row["model"].strip(), row["metric"].strip()
            if task not in TASKS:
                raise SchemaError(f"{path} line {line}: unknown task {task!r}")
            star = row["stars"].strip()
            if star not in ("", "*", "**", "***"):
                raise SchemaError(f"{path} line {line}: bad stars {star!r}")
            try:
                rho = float(row["rho"])
            except ValueError:
                raise SchemaError(f"{path} line {line}: rho is not a number")
            if not -1.0 <= rho <= 1.0:
                raise SchemaError(f"{path} line {line}: rho out of [-1, 1]")
            key = (task, model, metric)
            if key in seen:
                raise SchemaError(f"{path} line {line}: duplicate condition {key}")
            seen.add(key)
            out.append(ConditionRho(task, model, metric, rho, star != "", star))
    return out


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture CSV."""
    return Path(resources.files("xlingsim").joinpath("fixtures", name))


def bundled_conditions() -> list:
    """The bundled per-condition correlation fixture."""
    return load_condition_csv(fixture_path("paper_correlations.csv"))


@dataclass(frozen=True)
class MetricSummary:
    metric: str
    mean: float
    std: float
    min: float
    max: float
    n_significant: int
    n_conditions: int


def aggregate_conditions(conditions: list) -> list:
    """Per metric: mean, sample std (n-1), min, max of rho, significant count.

    Expects exactly one condition per (task, model, metric).
    """
    seen = set()
    for c in conditions:
        key = (c.task, c.model, c.metric)
        if key in seen:
            raise AnalysisError(f"duplicate condition {key}")
        seen.add(key)
    by_metric: dict = {}
    for c in conditions:
        by_metric.setdefault(c.metric, []).append(c)
    out = []
    for metric in sorted(by_metric):
        rows = by_metric[metric]
        rhos = np.array([c.rho for c in rows], dtype=np.float64)
        std = float(np.std(rhos, ddof=1)) if rhos.size > 1 else 0.0
        out.append(MetricSummary(metric, float(rhos.mean()), std,
                                 float(rhos.min()), float(rhos.max()),
                                 sum(c.significant for c in rows), rhos.size))
    return out


@dataclass(frozen=True)
class DomainEffect:
    metric: str
    formal_mean: float
    twitter_mean: float
    delta: float


def domain_effect(conditions: list) -> list:
    """Mean rho on formal-text tasks vs the social-media task, per metric."""
    present = {c.task for c in conditions}
    for task in TASKS:
        if task not in present:
            raise AnalysisError(f"domain effect needs all tasks; missing {task}")
    by_metric: dict = {}
    for c in conditions:
        by_metric.setdefault(c.metric, []).append(c)
    out = []
    for metric in sorted(by_metric):
        rows = by_metric[metric]
        formal = [c.rho for c in rows if c.task in FORMAL_TASKS]
        twitter = [c.rho for c in rows if c.task in TWITTER_TASKS]
        if not formal or not twitter:
            raise AnalysisError(f"metric {metric}: missing a domain side")
        f, tw = float(np.mean(formal)), float(np.mean(twitter))
        out.append(DomainEffect(metric, f, tw, tw - f))
    return out


@dataclass(frozen=True)
class ModelSummary:
    model: str
    mean: float
    best: float
    worst: float
    n_cells: int


def model_summary(conditions: list) -> list:
    """Mean/max/min rho per model over the full metric-task grid.

    The grid is (all metrics present) x (all tasks present); a missing cell
    for any model is an error listing the gaps.
    """
    metrics = sorted({c.metric for c in conditions})
    tasks = sorted({c.task for c in conditions})
    models = sorted({c.model for c in conditions})
    have = {(c.model, c.task, c.metric): c.rho for c in conditions}
    missing = [(m, t, k) for m in models for t in tasks for k in metrics
               if (m, t, k) not in have]
    if missing:
        raise AnalysisError(f"incomplete condition grid, missing cells: {missing}")
    out = []
    for model in models:
        rhos = np.array([have[(model, t, k)] for t in tasks for k in metrics])
        out.append(ModelSummary(model, float(rhos.mean()), float(rhos.max()),
                                float(rhos.min()), rhos.size))
    return out


# ---------------------------------------------------------------------------
# Inter-metric correlation


def inter_metric_correlation(metrics: list, seed: int = DEFAULT_SEED):
    """Symmetric Spearman matrix between metric values across shared keys.

    Returns (metric names, rho matrix). Each cell uses the keys where both
    metrics have a value. A cell whose inputs carry no rank variance (a
    saturated metric, e.g. P@1 pinned at 1.0 everywhere) is NaN rather than
    an error.
    """
    by_metric: dict = {}
    for m in metrics:
        by_metric.setdefault(m.metric, {})[(m.model_id, m.source, m.target)] = m.value
    names = sorted(by_metric)
    if len(names) < 2:
        raise AnalysisError("need at least 2 metrics for inter-metric correlation")
    k = len(names)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            keys = sorted(set(by_metric[names[i]]) & set(by_metric[names[j]]))
            if len(keys) < 3:
                raise AnalysisError(
                    f"metrics {names[i]} and {names[j]}: fewer than 3 shared keys")
            xs = [by_metric[names[i]][key] for key in keys]
            ys = [by_metric[names[j]][key] for key in keys]
            try:
                mat[i, j] = mat[j, i] = spearman(xs, ys, seed=seed).rho
            except ValidationError:
                mat[i, j] = mat[j, i] = np.nan
    return names, mat


# ---------------------------------------------------------------------------
# Pretraining-status stratification


@dataclass(frozen=True)
class PretrainingStratum:
    result: CorrelationResult | None
    mean_score: float | None
    n: int
    note: str = ""


def pretraining_stratified(pairs: list, coverage: CoverageTable,
                           seed: int = DEFAULT_SEED) -> dict:
    """Per model: correlation and mean score split on target-language coverage.

    Input pairs must belong to a single task. A model with an empty stratum
    gets a PretrainingStratum carrying a note instead of a result.
    """
    tasks = {p.task for p in pairs}
    if len(tasks) != 1:
        raise AnalysisError(f"pretraining stratification expects one task, got {sorted(tasks)}")
    by_model: dict = {}
    for p in pairs:
        by_model.setdefault(p.model, {"seen": [], "unseen": []})
        side = "seen" if coverage.seen(p.model, p.target) else "unseen"
        by_model[p.model][side].append(p)
    out = {}
    for model in sorted(by_model):
        sides = {}
        for side in ("seen", "unseen"):
            rows = by_model[model][side]
            if not rows:
                sides[side] = PretrainingStratum(
                    None, None, 0, f"{model} has no {side} targets")
                continue
            scores = [p.score for p in rows]
            if len(rows) < 3:
                sides[side] = PretrainingStratum(
                    None, float(np.mean(scores)), len(rows),
                    f"{model} {side}: n={len(rows)} < 3, correlation skipped")
                continue
            r = spearman([p.metric_value for p in rows], scores, seed=seed)
            sides[side] = PretrainingStratum(r, float(np.mean(scores)), len(rows))
        out[model] = sides
    return out


# ---------------------------------------------------------------------------
# Comparison against typological distances


@dataclass(frozen=True)
class ComparisonRow:
    task: str
    feature: str
    abs_rho: dict          # model -> |rho|
    signed_rho: dict       # model -> rho as observed
    winner_models: tuple   # models where this feature has the top |rho|


def uriel_comparison(metrics: list, transfers: list, uriel: list,
                     kinds=("genetic",), metric_names=("cosine_gap",),
                     seed: int = DEFAULT_SEED):
    """Absolute-rho comparison of embedding metrics against distance features.

    Distances correlate negatively with performance by construction, so
    features are compared on |rho|. Pairs without a distance value are
    excluded and counted in the returned notes. Returns (rows, notes).
    """
    dist_lookup: dict = {}
    for u in uriel:
        dist_lookup[(min(u.lang_a, u.lang_b), max(u.lang_a, u.lang_b), u.kind)] = u.value

    tasks = sorted({t.task for t in transfers})
    models = sorted({t.model_id for t in transfers})
    notes: list = []
    rows: list = []
    for task in tasks:
        t_rows = [t for t in transfers if t.task == task]
        per_feature: dict = {}
        for name in metric_names:
            joined = join(metrics, t_rows, name)
            signed = {}
            for st, r in correlate_stratified(joined.pairs, "per_model_task", seed=seed):
                signed[st.model] = r.rho
            per_feature[name] = signed
        for kind in kinds:
            signed = {}
            excluded_total = 0
            for model in models:
                xs, ys, excluded = [], [], 0
                for t in t_rows:
                    if t.model_id != model:
                        continue
                    key = (min(t.source, t.target), max(t.source, t.target), kind)
                    if key not in dist_lookup:
                        excluded += 1
                        continue
                    xs.append(dist_lookup[key])
                    ys.append(t.score)
                if excluded:
                    notes.append(f"{task}/{model}/uriel_{kind}: {excluded} pairs "
                                 f"without a distance value excluded")
                excluded_total += excluded
                if not xs:
                    continue
                signed[model] = spearman(xs, ys, seed=seed).rho
            if not signed:
                raise AnalysisError(f"no {kind} distances cover any evaluated pair")
            per_feature[f"uriel_{kind}"] = signed
        # winner per model: feature with the largest |rho|
        winners: dict = {}
        for feature, signed in per_feature.items():
            for model, rho in signed.items():
                if model not in winners or abs(rho) > winners[model][1]:
                    winners[model] = (feature, abs(rho))
        for feature in list(metric_names) + [f"uriel_{k}" for k in kinds]:
            signed = per_feature.get(feature, {})
            if not signed:
                continue
            rows.append(ComparisonRow(
                task, feature,
                {m: abs(r) for m, r in signed.items()},
                dict(signed),
                tuple(m for m in sorted(winners) if winners[m][0] == feature)))
    return rows, notes
