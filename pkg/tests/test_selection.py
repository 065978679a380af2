import numpy as np
import pytest

from xlingsim.errors import AnalysisError, ValidationError
from xlingsim.metrics import MetricRecord
from xlingsim.selection import (
    build_selection_report,
    random_baseline,
    rank_sources,
    top_k_accuracy,
)
from xlingsim.store import TransferRecord


def metric_rows(values, target="zzz", metric="cosine_gap", model="m1"):
    return [MetricRecord(model, s, target, metric, v) for s, v in values]


class TestRankSources:
    def test_descending_order(self):
        rows = metric_rows([("aaa", 0.3), ("bbb", 0.2), ("ccc", 0.1)])
        ranking = rank_sources(rows, "zzz", "cosine_gap")
        assert [r.source for r in ranking] == ["aaa", "bbb", "ccc"]
        assert [r.rank for r in ranking] == [1, 2, 3]
        assert not any(r.tied for r in ranking)

    def test_ties_alphabetical_and_flagged(self):
        rows = metric_rows([("ccc", 0.2), ("aaa", 0.2), ("bbb", 0.5)])
        ranking = rank_sources(rows, "zzz", "cosine_gap")
        assert [r.source for r in ranking] == ["bbb", "aaa", "ccc"]
        assert [r.tied for r in ranking] == [False, True, True]

    def test_twelve_language_task_gives_eleven(self):
        rows = metric_rows([(f"a{chr(97 + i)}a", i / 20) for i in range(11)])
        assert len(rank_sources(rows, "zzz", "cosine_gap")) == 11

    def test_no_candidates(self):
        with pytest.raises(AnalysisError, match="no candidate sources"):
            rank_sources([], "zzz", "cosine_gap")

    def test_permutation_of_candidates(self):
        rng = np.random.default_rng(0)
        sources = ["".join(c) for c in
                   zip(*[iter("abcdefghijklmnopqrstuvwxyz"[:24])] * 3)]
        rows = metric_rows([(s, float(v)) for s, v in
                            zip(sources, rng.uniform(-1, 1, len(sources)))])
        ranking = rank_sources(rows, "zzz", "cosine_gap")
        assert sorted(r.source for r in ranking) == sorted(sources)

    def test_argsort_invariance_under_increasing_transform(self):
        rng = np.random.default_rng(1)
        rows = metric_rows([(f"a{c}a", float(v)) for c, v in
                            zip("bcdefgh", rng.uniform(0.01, 1, 7))])
        base = [r.source for r in rank_sources(rows, "zzz", "cosine_gap")]
        warped = [MetricRecord(m.model_id, m.source, m.target, m.metric,
                               float(np.expm1(3 * m.value))) for m in rows]
        assert [r.source for r in rank_sources(warped, "zzz", "cosine_gap")] == base


class TestRandomBaseline:
    def test_published_values(self):
        assert random_baseline(12, 1) == 1 / 11
        assert random_baseline(12, 3) == 3 / 11
        assert f"{random_baseline(12, 1):.4f}" == "0.0909"
        assert f"{random_baseline(12, 3):.4f}" == "0.2727"
        assert random_baseline(6, 3) == pytest.approx(0.6)

    def test_k_out_of_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            random_baseline(12, 12)
        with pytest.raises(ValidationError, match="out of range"):
            random_baseline(12, 0)


def grid_data(rng, langs, model="m1", task="NER", aligned=True):
    """Full directed grid; transfer score either follows the metric or not."""
    metrics, transfers = [], []
    for t in langs:
        vals = rng.uniform(0.0, 1.0, len(langs) - 1)
        for (s, v) in zip([x for x in langs if x != t], vals):
            metrics.append(MetricRecord(model, s, t, "cosine_gap", float(v)))
            score = v * 0.5 + 0.2 if aligned else float(rng.uniform(0.1, 0.9))
            transfers.append(TransferRecord(model, task, s, t, round(score, 6)))
    return metrics, transfers


LANGS6 = ["aaa", "bbb", "ccc", "ddd", "eee", "fff"]


class TestTopK:
    def test_metric_order_equals_oracle_order(self, ):
        rng = np.random.default_rng(3)
        metrics, transfers = grid_data(rng, LANGS6, aligned=True)
        for k in range(1, 6):
            acc, _, _ = top_k_accuracy(metrics, transfers, "cosine_gap", k)
            assert acc == 1.0

    def test_partial_ranks_enumeration(self):
        # oracle-best sources sit at metric ranks 1, 2, 4 across three targets
        langs = ["aaa", "bbb", "ccc", "ddd", "eee"]
        metrics, transfers = [], []
        rank_of_oracle = {"aaa": 1, "bbb": 2, "ccc": 4}
        for t, oracle_rank in rank_of_oracle.items():
            cands = [x for x in langs if x != t]
            for i, s in enumerate(cands):
                metrics.append(MetricRecord("m1", s, t, "cosine_gap",
                                            1.0 - i / 10))
            oracle_source = cands[oracle_rank - 1]
            for s in cands:
                transfers.append(TransferRecord(
                    "m1", "NER", s, t, 0.9 if s == oracle_source else 0.1))
        acc1, _, _ = top_k_accuracy(metrics, transfers, "cosine_gap", 1)
        acc3, _, _ = top_k_accuracy(metrics, transfers, "cosine_gap", 3)
        assert acc1 == pytest.approx(1 / 3)
        assert acc3 == pytest.approx(2 / 3)

    def test_monotone_in_k_and_reaches_one(self):
        rng = np.random.default_rng(12)
        for trial in range(100):
            langs = LANGS6[:int(rng.integers(3, 7))]
            metrics, transfers = grid_data(rng, langs, aligned=False)
            accs = [build_selection_report(metrics, transfers, "cosine_gap",
                                           list(range(1, len(langs))))
                    .top_k]
            accs = [t.accuracy for t in accs[0]]
            assert all(a <= b for a, b in zip(accs, accs[1:]))
            assert accs[-1] == 1.0

    def test_oracle_tie_counts_any_hit(self):
        langs = ["aaa", "bbb", "ccc", "ddd"]
        metrics, transfers = [], []
        t = "ddd"
        cands = ["aaa", "bbb", "ccc"]
        for i, s in enumerate(cands):
            metrics.append(MetricRecord("m1", s, t, "cosine_gap", 1.0 - i / 10))
        # two sources tie for best transfer; one of them is metric rank 1
        transfers.append(TransferRecord("m1", "NER", "aaa", t, 0.9))
        transfers.append(TransferRecord("m1", "NER", "bbb", t, 0.3))
        transfers.append(TransferRecord("m1", "NER", "ccc", t, 0.9))
        acc, details, notes = top_k_accuracy(metrics, transfers, "cosine_gap", 1)
        assert acc == 1.0
        assert details[0].oracle_sources == ("aaa", "ccc")
        assert details[0].oracle_tied
        assert any("tied-best" in n for n in notes)

    def test_target_without_transfer_excluded_with_note(self):
        rng = np.random.default_rng(5)
        metrics, transfers = grid_data(rng, LANGS6)
        # fff stays in the task as a source but loses all rows as a target
        transfers = [t for t in transfers if t.target != "fff"]
        acc, details, notes = top_k_accuracy(metrics, transfers, "cosine_gap", 1)
        assert all(d.target != "fff" for d in details)
        assert any("fff" in n and "no transfer data" in n for n in notes)

    def test_out_of_task_metric_rows_accounted(self):
        rng = np.random.default_rng(5)
        metrics, transfers = grid_data(rng, LANGS6)
        metrics.append(MetricRecord("m1", "aaa", "ggg", "cosine_gap", 0.5))
        _, details, notes = top_k_accuracy(metrics, transfers, "cosine_gap", 1)
        assert all(d.target != "ggg" for d in details)
        assert any("outside the task's language set" in n for n in notes)


class TestSelectionReport:
    def test_report_fields(self):
        rng = np.random.default_rng(8)
        metrics, transfers = grid_data(rng, LANGS6)
        rep = build_selection_report(metrics, transfers, "cosine_gap", [1, 3])
        assert rep.n_languages == 6
        assert rep.baselines == {1: 1 / 5, 3: 3 / 5}
        assert len(rep.targets) == 6
        for d in rep.targets:
            assert len(d.ranking) == 5  # N-1 candidates per target
        assert [t.k for t in rep.top_k] == [1, 3]

    def test_mixed_slice_rejected(self):
        rng = np.random.default_rng(8)
        m1, t1 = grid_data(rng, LANGS6, model="m1")
        m2, t2 = grid_data(rng, LANGS6, model="m2")
        with pytest.raises(AnalysisError, match="one \\(model, task\\)"):
            build_selection_report(m1 + m2, t1 + t2, "cosine_gap", [1])

    def test_candidates_limited_to_task_languages(self):
        # metric grid spans six languages, the task only three: rankings must
        # hold the task's N-1 = 2 candidates, never out-of-task sources
        rng = np.random.default_rng(21)
        metrics, _ = grid_data(rng, LANGS6)
        _, transfers = grid_data(rng, LANGS6[:3])
        rep = build_selection_report(metrics, transfers, "cosine_gap", [1, 2])
        assert rep.n_languages == 3
        assert all(len(d.ranking) == 2 for d in rep.targets)
        assert rep.baselines == {1: 1 / 2, 2: 1.0}
        in_task = set(LANGS6[:3])
        for d in rep.targets:
            assert {r.source for r in d.ranking} <= in_task
