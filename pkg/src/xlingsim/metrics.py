"""Five similarity metrics over aligned sentence-embedding matrices.

Given unit-normalized source rows S and target rows T with row i of each
being translations of the same sentence, the similarity matrix is
M[i][j] = dot(S_i, T_j). From M we derive:

    cosine_mean   mean of the diagonal (aligned-pair cosine)
    cosine_gap    cosine_mean minus the mean over all N^2 entries
    p_at_1        fraction of rows (or columns) whose argmax sits on the diagonal
    csls          hubness-corrected similarity, averaged over aligned pairs
    cka           linear-kernel centered kernel alignment, unbiased estimator

All reductions accumulate in float64 regardless of storage precision.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError, ValidationError
from .store import NORM_TOL, EmbeddingMatrix, is_language_code

METRICS = ("cosine_mean", "cosine_gap", "p_at_1_st", "p_at_1_ts", "csls", "cka")

DEFAULT_CSLS_K = 10

# Value ranges per metric; csls is unbounded.
_RANGES = {
    "cosine_mean": (-1.0, 1.0),
    "cosine_gap": (-2.0, 2.0),
    "p_at_1_st": (0.0, 1.0),
    "p_at_1_ts": (0.0, 1.0),
    "cka": (0.0, 1.0),
}
_RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class SimilarityMatrix:
    """Dense cosine similarities for one directed (source, target) pair."""

    m: np.ndarray
    source_lang: str
    target_lang: str
    model_id: str

    @property
    def n(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class MetricRecord:
    """One metric value for one (model, source, target) directed pair."""

    model_id: str
    source: str
    target: str
    metric: str
    value: float
    k: int | None = None

    def validate(self) -> None:
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")
        if not np.isfinite(self.value):
            raise ValidationError(
                f"non-finite {self.metric} for ({self.model_id}, {self.source}, {self.target})")
        rng = _RANGES.get(self.metric)
        if rng and not (rng[0] - _RANGE_SLACK <= self.value <= rng[1] + _RANGE_SLACK):
            raise ValidationError(
                f"{self.metric} value {self.value} outside range {list(rng)}")
        if self.k is not None and self.k < 1:
            raise ValidationError("k must be a positive integer")


def _check_pair(s: EmbeddingMatrix, t: EmbeddingMatrix) -> None:
    if not (s.normalized and t.normalized):
        raise ValidationError("unnormalized input: both matrices must be L2-normalized")
    if s.n_sentences != t.n_sentences:
        raise ValidationError(
            f"shape mismatch: {s.n_sentences} vs {t.n_sentences} sentences")
    if s.dim != t.dim:
        raise ValidationError(f"shape mismatch: dim {s.dim} vs {t.dim}")
    if s.model_id != t.model_id:
        raise ValidationError(
            f"model mismatch: {s.model_id!r} vs {t.model_id!r}")


def similarity_matrix(s: EmbeddingMatrix, t: EmbeddingMatrix) -> SimilarityMatrix:
    """M[i][j] = dot(s_i, t_j), computed in float64.

    Rows of s and t must be aligned: row i of each embeds the same sentence.
    Entries are bounded by the product of the row-norm tolerances; anything
    beyond that means an unnormalized input slipped through.
    """
    _check_pair(s, t)
    m = s.rows.astype(np.float64) @ t.rows.astype(np.float64).T
    if np.abs(m).max() > (1.0 + NORM_TOL) ** 2:
        raise ValidationError("similarity entry outside the [-1, 1] tolerance band")
    return SimilarityMatrix(m, s.language_id, t.language_id, s.model_id)


def cosine_mean(sim: SimilarityMatrix) -> float:
    """Mean similarity of aligned pairs: average of the diagonal."""
    return float(np.mean(np.diagonal(sim.m)))


def cosine_gap(sim: SimilarityMatrix) -> float:
    """Aligned-pair mean minus the mean over all N^2 entries.

    The baseline includes the diagonal; subtracting it corrects for
    anisotropy, where all similarities are inflated by a shared cone.
    """
    return cosine_mean(sim) - float(sim.m.mean())


def p_at_1(sim: SimilarityMatrix, direction: str = "source_to_target") -> float:
    """Fraction of sentences whose nearest cross-lingual neighbor is aligned.

    Ties break to the lowest index, so results are reproducible.
    """
    n = sim.n
    idx = np.arange(n)
    if direction == "source_to_target":
        hits = np.argmax(sim.m, axis=1) == idx
    elif direction == "target_to_source":
        hits = np.argmax(sim.m, axis=0) == idx
    else:
        raise ValidationError(f"unknown direction {direction!r}")
    return float(np.mean(hits))


def csls_mean(sim: SimilarityMatrix, k: int = DEFAULT_CSLS_K) -> float:
    """Mean CSLS score over aligned pairs.

    Each pair's similarity 2*M[i][i] is penalized by the mean similarity of
    s_i to its k nearest target neighbors and of t_i to its k nearest source
    neighbors, cancelling hub effects. Neighborhoods span the full other-side
    set, aligned translation included; k is capped at N.
    """
    n = sim.n
    if n < 2:
        raise ValidationError("CSLS undefined for fewer than 2 sentences")
    if k < 1:
        raise ValidationError("k must be a positive integer")
    k_eff = min(k, n)
    m = sim.m
    r_rows = np.partition(m, n - k_eff, axis=1)[:, n - k_eff:].mean(axis=1)
    r_cols = np.partition(m, n - k_eff, axis=0)[n - k_eff:, :].mean(axis=0)
    return float(np.mean(2.0 * np.diagonal(m) - r_rows - r_cols))


# ---------------------------------------------------------------------------
# CKA with the unbiased HSIC estimator


@dataclass(frozen=True)
class GramStats:
    """Reusable per-language pieces of the unbiased HSIC estimator."""

    gram0: np.ndarray     # Gram matrix with zeroed diagonal
    row_sums: np.ndarray
    total: float
    self_hsic: float


def gram_stats(m: EmbeddingMatrix) -> GramStats:
    """Precompute Gram-side terms for one language (reused across pairs)."""
    x = m.rows.astype(np.float64)
    g = x @ x.T
    np.fill_diagonal(g, 0.0)
    row_sums = g.sum(axis=1)
    total = float(g.sum())
    return GramStats(g, row_sums, total, _hsic_unbiased_stats(
        g, row_sums, total, g, row_sums, total))


def _hsic_unbiased_stats(ka, ka_rows, ka_total, kb, kb_rows, kb_total) -> float:
    n = ka.shape[0]
    trace = float(np.sum(ka * kb))           # both symmetric with zero diagonal
    cross = float(ka_rows @ kb_rows)         # 1^T K L 1
    return (trace
            + ka_total * kb_total / ((n - 1) * (n - 2))
            - 2.0 * cross / (n - 2)) / (n * (n - 3))


def cka_from_stats(a: GramStats, b: GramStats) -> float:
    """Normalized alignment of two precomputed Gram structures, clamped to [0, 1]."""
    if a.self_hsic <= 0.0 or b.self_hsic <= 0.0:
        raise ValidationError("degenerate Gram structure: self-HSIC is not positive")
    raw = _hsic_unbiased_stats(a.gram0, a.row_sums, a.total,
                               b.gram0, b.row_sums, b.total)
    raw /= np.sqrt(a.self_hsic * b.self_hsic)
    if raw < -1e-6:
        warnings.warn(f"CKA raw value {raw:.3e} clamped to 0", stacklevel=3)
    return float(min(max(raw, 0.0), 1.0))


def cka(s: EmbeddingMatrix, t: EmbeddingMatrix) -> float:
    """Linear-kernel CKA between two aligned embedding sets.

    Uses the unbiased HSIC estimator over Gram matrices of the normalized
    rows; requires N >= 4. Symmetric in its arguments and invariant to any
    shared orthogonal transform.
    """
    _check_pair(s, t)
    if s.n_sentences < 4:
        raise ValidationError("CKA requires at least 4 sentences (unbiased estimator)")
    return cka_from_stats(gram_stats(s), gram_stats(t))


def all_metrics(s: EmbeddingMatrix, t: EmbeddingMatrix,
                k: int = DEFAULT_CSLS_K,
                cka_stats: tuple[GramStats, GramStats] | None = None) -> list[MetricRecord]:
    """All six metric records for one directed pair (both retrieval directions).

    The similarity matrix is computed once and shared. Callers batching many
    pairs may pass precomputed Gram stats to avoid rebuilding them per pair.
    """
    sim = similarity_matrix(s, t)
    if cka_stats is None:
        cka_value = cka(s, t)
    else:
        cka_value = cka_from_stats(*cka_stats)
    values = {
        "cosine_mean": cosine_mean(sim),
        "cosine_gap": cosine_gap(sim),
        "p_at_1_st": p_at_1(sim, "source_to_target"),
        "p_at_1_ts": p_at_1(sim, "target_to_source"),
        "csls": csls_mean(sim, k),
        "cka": cka_value,
    }
    records = []
    for name in METRICS:
        rec = MetricRecord(s.model_id, s.language_id, t.language_id, name,
                           values[name], k=min(k, sim.n) if name == "csls" else None)
        rec.validate()
        records.append(rec)
    return records


def write_metrics_csv(records: list, path: str | Path) -> None:
    """Write metric records; header model,source,target,metric,value,k.

    Values carry 6 decimal places; k is blank for metrics without a
    neighborhood size.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "source", "target", "metric", "value", "k"])
        for r in records:
            w.writerow([r.model_id, r.source, r.target, r.metric,
                        f"{r.value:.6f}", "" if r.k is None else r.k])


def load_metrics_csv(path: str | Path) -> list:
    """Read metric records back, re-validating ranges and key uniqueness."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        expected = ["model", "source", "target", "metric", "value", "k"]
        if reader.fieldnames is None or sorted(reader.fieldnames) != sorted(expected):
            raise SchemaError(f"{path}: expected header {','.join(expected)}, got "
                              f"{','.join(reader.fieldnames or [])}")
        records, seen = [], set()
        for line, row in enumerate(reader, start=2):
            model = row["model"].strip()
            source = row["source"].strip()
            target = row["target"].strip()
            metric = row["metric"].strip()
            if not model:
                raise SchemaError(f"{path} line {line}: empty model id")
            for code, col in ((source, "source"), (target, "target")):
                if not is_language_code(code):
                    raise SchemaError(f"{path} line {line}: bad language code "
                                      f"{code!r} in {col}")
            if source == target:
                raise SchemaError(f"{path} line {line}: source equals target")
            try:
                value = float(row["value"])
            except ValueError:
                raise SchemaError(f"{path} line {line}: value is not a number")
            raw_k = row["k"].strip()
            k = None
            if raw_k:
                try:
                    k = int(raw_k)
                except ValueError:
                    raise SchemaError(f"{path} line {line}: k is not an integer")
            key = (model, source, target, metric)
            if key in seen:
                raise SchemaError(f"{path} line {line}: duplicate metric row for {key}")
            seen.add(key)
            rec = MetricRecord(model, source, target, metric, value, k)
            try:
                rec.validate()
            except ValidationError as e:
                raise SchemaError(f"{path} line {line}: {e}") from e
            records.append(rec)
    if not records:
        raise SchemaError(f"{path}: no metric rows")
    return records
