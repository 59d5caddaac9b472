"""Ranking and Hit@k tests."""

import numpy as np
import pytest

from promptlink.config import HyperConfig
from promptlink.data import Dataset, synth_dataset
from promptlink.evaluation import evaluate, hit_at_k, rank
from promptlink.model import LinkerModel


def _setup(seed=0, mentions=8, entities=16, noise=0.2, d=6):
    cfg = HyperConfig(d_c=d, d_v=d, d_t=d, batch_size=2, seed=seed)
    ds = synth_dataset(seed, mentions, entities, d_c=d, d_t=d, noise_scale=noise)
    return LinkerModel(cfg), ds


def _brute_force_ranks(scores: np.ndarray, ids: list[str], golds: list[str]):
    """Independent rescan: rank of each gold under (-score, id) ordering."""
    ranks = []
    for row, gold in zip(scores, golds):
        if gold not in ids:
            ranks.append(None)
            continue
        g = ids.index(gold)
        better = sum(
            1 for j in range(len(ids))
            if scores_row_beats(row[j], ids[j], row[g], ids[g])
        )
        ranks.append(better + 1)
    return ranks


def scores_row_beats(score_j, id_j, score_g, id_g):
    return score_j > score_g or (score_j == score_g and id_j < id_g)


class TestHitAtK:
    def test_all_rank_one(self):
        assert hit_at_k([1, 1, 1], 1) == 1.0
        assert hit_at_k([1, 1, 1], 5) == 1.0

    def test_hand_ranks(self):
        ranks = [1, 2, 5, 7]
        assert hit_at_k(ranks, 1) == 0.25
        assert hit_at_k(ranks, 3) == 0.5
        assert hit_at_k(ranks, 5) == 0.75
        assert hit_at_k(ranks, 10) == 1.0

    def test_none_is_miss_but_counts(self):
        assert hit_at_k([1, None, None, 1], 100) == 0.5

    def test_monotone_in_k(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            ranks = [int(r) if r > 0 else None
                     for r in rng.integers(-2, 30, size=10)]
            values = [hit_at_k(ranks, k) for k in range(1, 31)]
            assert all(a <= b for a, b in zip(values, values[1:]))

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n, c = int(rng.integers(1, 8)), int(rng.integers(2, 10))
            ids = [f"e{j}" for j in range(c)]
            scores = np.round(rng.standard_normal((n, c)), 1)  # rounding forces ties
            golds = [ids[int(rng.integers(0, c))] for _ in range(n)]
            ranks = []
            for i in range(n):
                order = sorted(range(c), key=lambda j: (-scores[i, j], ids[j]))
                ranks.append(order.index(ids.index(golds[i])) + 1)
            expected = _brute_force_ranks(scores, ids, golds)
            assert ranks == expected
            for k in (1, 3, 5):
                want = sum(1 for r in expected if r is not None and r <= k) / n
                assert hit_at_k(ranks, k) == want


class TestRanking:
    def test_single_candidate_is_rank_one(self):
        model, ds = _setup()
        ds.mentions[0].candidate_ids = [ds.mentions[0].gold_entity_id]
        res = rank(model, ds, ds.mentions[0].id)
        assert len(res.ranking) == 1
        assert res.gold_rank == 1
        assert res.ranking[0].score == pytest.approx(
            (res.ranking[0].s_v + res.ranking[0].s_t + res.ranking[0].s_c) / 3.0,
            abs=1e-6,
        )

    def test_candidate_order_does_not_matter(self):
        model, ds = _setup(seed=3)
        m = ds.mentions[0]
        cands = [e.id for e in ds.kb.records()][:6]
        m.candidate_ids = list(cands)
        a = rank(model, ds, m.id)
        m.candidate_ids = list(reversed(cands))
        b = rank(model, ds, m.id)
        assert [e.entity_id for e in a.ranking] == [e.entity_id for e in b.ranking]
        assert [e.score for e in a.ranking] == [e.score for e in b.ranking]

    def test_tie_break_by_ascending_id(self):
        # two entities with bit-identical features tie exactly
        model, ds = _setup(seed=4, noise=0.0)
        twin_src = ds.kb.records()[3]
        twin = ds.kb.records()[4]
        twin.features = twin_src.features
        m = ds.mentions[0]
        m.candidate_ids = [twin_src.id, twin.id]
        res = rank(model, ds, m.id)
        assert [e.entity_id for e in res.ranking] == sorted([twin_src.id, twin.id])

    def test_unknown_mention_id(self):
        from promptlink.errors import ValidationError
        model, ds = _setup()
        with pytest.raises(ValidationError, match="nope"):
            rank(model, ds, "nope")

    def test_sorted_descending(self):
        model, ds = _setup(seed=5)
        report = evaluate(model, ds, ks=(1, 3))
        for r in report.results:
            scores = [e.score for e in r.ranking]
            assert scores == sorted(scores, reverse=True)


class TestEvaluate:
    def test_full_kb_when_no_candidates(self):
        model, ds = _setup(seed=6, mentions=4, entities=9)
        report = evaluate(model, ds, ks=(1,))
        assert all(len(r.ranking) == 9 for r in report.results)

    def test_missing_gold_counts_as_miss(self):
        model, ds = _setup(seed=7, mentions=4, entities=8)
        ds.mentions[0].candidate_ids = [
            e.id for e in ds.kb.records() if e.id != ds.mentions[0].gold_entity_id
        ][:3]
        report = evaluate(model, ds, ks=(1, 3, 5, 100))
        assert report.n_missing_gold == 1
        assert report.results[0].gold_rank is None
        assert report.hit_at_k[100] == pytest.approx(3 / 4)

    def test_mention_order_permutation_invariant(self):
        model, ds = _setup(seed=8, mentions=7, entities=12)
        base = evaluate(model, ds, ks=(1, 3, 5))
        rng = np.random.default_rng(0)
        for _ in range(5):
            perm = list(rng.permutation(len(ds.mentions)))
            shuffled = Dataset(ds.split, [ds.mentions[i] for i in perm], ds.kb,
                               ds.d_c, ds.d_t)
            rep = evaluate(model, shuffled, ks=(1, 3, 5))
            assert rep.hit_at_k == base.hit_at_k
            by_id = {r.mention_id: r for r in rep.results}
            for r in base.results:
                other = by_id[r.mention_id]
                assert other.gold_rank == r.gold_rank
                assert [e.entity_id for e in other.ranking] == \
                       [e.entity_id for e in r.ranking]
                assert [e.score for e in other.ranking] == [e.score for e in r.ranking]

    def test_hit_monotone_in_reports(self):
        model, ds = _setup(seed=9, mentions=6, entities=10, noise=0.5)
        report = evaluate(model, ds, ks=(1, 3, 5, 10))
        values = [report.hit_at_k[k] for k in (1, 3, 5, 10)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_report_dict_schema(self):
        model, ds = _setup(seed=10, mentions=3, entities=5)
        doc = evaluate(model, ds, ks=(1, 3)).to_dict(top=2)
        assert set(doc) == {"split", "k_values", "hit_at_k", "counts", "mentions"}
        assert doc["counts"]["mentions"] == 3
        assert all(len(m["ranking"]) == 2 for m in doc["mentions"])
        assert all(set(e) == {"entity_id", "score", "s_v", "s_t", "s_c"}
                   for m in doc["mentions"] for e in m["ranking"])
