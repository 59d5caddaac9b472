"""Candidate ranking, Hit@k aggregation, and report assembly.

Internal processing order is canonical (mentions by sorted id, entities
in sorted-id order), so results are bit-identical no matter how the
dataset happens to be ordered; the report lists mentions in dataset
order. Ties are broken by ascending entity id, which makes rankings
reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, pack_features
from .errors import ValidationError
from .model import LinkerModel, ProjectedFeatures

DEFAULT_KS = (1, 3, 5, 10, 20)
_EVAL_CHUNK = 32


@dataclass
class RankedEntry:
    entity_id: str
    score: float
    s_v: float
    s_t: float
    s_c: float


@dataclass
class MentionResult:
    mention_id: str
    gold_entity_id: str
    gold_rank: int | None          # 1-based; None when gold absent from candidates
    ranking: list[RankedEntry]


@dataclass
class RankingReport:
    split: str
    ks: tuple[int, ...]
    hit_at_k: dict[int, float]
    n_mentions: int
    n_missing_gold: int
    results: list[MentionResult] = field(default_factory=list)

    def to_dict(self, top: int | None = None) -> dict:
        return {
            "split": self.split,
            "k_values": list(self.ks),
            "hit_at_k": {str(k): v for k, v in self.hit_at_k.items()},
            "counts": {"mentions": self.n_mentions, "missing_gold": self.n_missing_gold},
            "mentions": [
                {
                    "mention_id": r.mention_id,
                    "gold": r.gold_entity_id,
                    "gold_rank": r.gold_rank,
                    "ranking": [
                        {
                            "entity_id": e.entity_id,
                            "score": e.score,
                            "s_v": e.s_v,
                            "s_t": e.s_t,
                            "s_c": e.s_c,
                        }
                        for e in (r.ranking if top is None else r.ranking[:top])
                    ],
                }
                for r in self.results
            ],
        }


def hit_at_k(gold_ranks: list[int | None], k: int) -> float:
    """Fraction of mentions whose gold entity sits within the top k.

    A rank of None (gold not among the scored candidates) counts as a
    miss while still counting toward N.
    """
    if not gold_ranks:
        raise ValidationError("hit_at_k needs at least one mention")
    hits = sum(1 for r in gold_ranks if r is not None and r <= k)
    return hits / len(gold_ranks)


def _project_entities(model: LinkerModel, dataset: Dataset) -> tuple[list[str], ProjectedFeatures]:
    ids = sorted(dataset.kb.ids())
    bundles = [dataset.kb.get(e).features for e in ids]
    packed = pack_features(ids, bundles)
    return ids, model.project(packed, "entity")


def _order_candidates(scores: np.ndarray, ids: list[str]) -> list[int]:
    """Indices sorted by descending score, ties by ascending entity id."""
    return sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))


def evaluate(model: LinkerModel, dataset: Dataset, ks=DEFAULT_KS,
             report_top: int | None = None) -> RankingReport:
    """Rank every mention's candidates and aggregate Hit@k.

    Mentions without a candidate list are ranked against the full
    knowledge base. ``report_top`` truncates the per-mention lists kept
    in the report (aggregates always use the full ranking).
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not dataset.mentions:
        raise ValidationError("evaluate needs at least one mention")
    ent_ids, ent_proj = _project_entities(model, dataset)
    col_of = {eid: i for i, eid in enumerate(ent_ids)}

    order = sorted(range(len(dataset.mentions)), key=lambda i: dataset.mentions[i].id)
    by_mention: dict[str, MentionResult] = {}
    for start in range(0, len(order), _EVAL_CHUNK):
        chunk = [dataset.mentions[i] for i in order[start:start + _EVAL_CHUNK]]
        packed = pack_features([m.id for m in chunk], [m.features for m in chunk])
        mp = model.project(packed, "mention")
        s_v, s_t, s_c = model.score_grid(mp, ent_proj)
        s = (s_v.data + s_t.data + s_c.data) / 3.0
        for row, mention in enumerate(chunk):
            if mention.candidate_ids is None:
                cand_ids = ent_ids
                cols = np.arange(len(ent_ids))
            else:
                cand_ids = sorted(mention.candidate_ids)
                cols = np.asarray([col_of[c] for c in cand_ids])
            cand_scores = s[row, cols]
            ordering = _order_candidates(cand_scores, cand_ids)
            ranking = [
                RankedEntry(
                    entity_id=cand_ids[i],
                    score=float(cand_scores[i]),
                    s_v=float(s_v.data[row, cols[i]]),
                    s_t=float(s_t.data[row, cols[i]]),
                    s_c=float(s_c.data[row, cols[i]]),
                )
                for i in ordering
            ]
            gold_rank = None
            for pos, entry in enumerate(ranking, start=1):
                if entry.entity_id == mention.gold_entity_id:
                    gold_rank = pos
                    break
            by_mention[mention.id] = MentionResult(
                mention_id=mention.id,
                gold_entity_id=mention.gold_entity_id,
                gold_rank=gold_rank,
                ranking=ranking if report_top is None else ranking[:report_top],
            )

    results = [by_mention[m.id] for m in dataset.mentions]
    gold_ranks = [r.gold_rank for r in results]
    return RankingReport(
        split=dataset.split,
        ks=ks,
        hit_at_k={k: hit_at_k(gold_ranks, k) for k in ks},
        n_mentions=len(results),
        n_missing_gold=sum(1 for r in gold_ranks if r is None),
        results=results,
    )


def rank(model: LinkerModel, dataset: Dataset, mention_id: str,
         top: int | None = None) -> MentionResult:
    """Rank one mention's candidates (or the whole KB when none are listed)."""
    matches = [m for m in dataset.mentions if m.id == mention_id]
    if not matches:
        raise ValidationError(f"mention {mention_id!r} not found in dataset")
    mention = matches[0]
    sub = Dataset(dataset.split, [mention], dataset.kb, dataset.d_c, dataset.d_t)
    report = evaluate(model, sub, ks=(1,), report_top=top)
    return report.results[0]
