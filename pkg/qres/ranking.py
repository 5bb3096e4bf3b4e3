"""Provider ranking from per-keyword match lists.

Two schemes: ``boolean`` counts matched keywords; ``prioritized`` builds an
evaluation matrix per keyword (providers x token slots), column-normalizes it
into an evaluation vector and aggregates the vectors with the customer's
priority weights. All scores are exact ``Fraction`` values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from qres.errors import EmptyInput, LengthMismatch, RaggedRows
from qres.mpc.qese import MatchList

BOOLEAN = "boolean"
PRIORITIZED = "prioritized"
SCHEMES = (BOOLEAN, PRIORITIZED)


@dataclass(frozen=True)
class RankingEntry:
    anonymous_id: str
    score: Fraction
    hits_per_keyword: List[bool] = field(default_factory=list, compare=False)

    def to_dict(self) -> dict:
        return {
            "anonymous_id": self.anonymous_id,
            "score_numerator": self.score.numerator,
            "score_denominator": self.score.denominator,
            "hits_per_keyword": [bool(h) for h in self.hits_per_keyword],
        }


@dataclass
class RankingResult:
    scheme: str
    entries: List[RankingEntry]
    excluded: List[str] = field(default_factory=list)

    @property
    def order(self) -> List[str]:
        return [e.anonymous_id for e in self.entries]

    @property
    def top(self) -> Optional[RankingEntry]:
        return self.entries[0] if self.entries else None

    def scores(self) -> Dict[str, Fraction]:
        return {e.anonymous_id: e.score for e in self.entries}

    def to_document(self) -> dict:
        return {
            "scheme": self.scheme,
            "ranking": [e.to_dict() for e in self.entries],
            "excluded": list(self.excluded),
        }

    @classmethod
    def from_document(cls, doc: Mapping) -> "RankingResult":
        entries = [
            RankingEntry(
                anonymous_id=r["anonymous_id"],
                score=Fraction(int(r["score_numerator"]), int(r["score_denominator"])),
                hits_per_keyword=list(r.get("hits_per_keyword", [])),
            )
            for r in doc.get("ranking", [])
        ]
        return cls(scheme=doc["scheme"], entries=entries, excluded=list(doc.get("excluded", [])))


def _ordered(scheme: str, entries: List[RankingEntry], excluded: Sequence[str] = ()) -> RankingResult:
    # ties broken by anonymous id
    entries = sorted(entries, key=lambda e: (-e.score, e.anonymous_id))
    return RankingResult(scheme=scheme, entries=entries, excluded=sorted(excluded))


def match_value(c_w: bytes, c_t: bytes) -> int:
    return 1 if c_w == c_t else 0


def rank_boolean(matchlists: Mapping[str, MatchList], excluded: Sequence[str] = ()) -> RankingResult:
    if not matchlists:
        raise EmptyInput("no provider match lists to rank")
    entries = [
        RankingEntry(pid, Fraction(ml.hit_count), ml.hit_flags)
        for pid, ml in matchlists.items()
    ]
    return _ordered(BOOLEAN, entries, excluded)


@dataclass
class EvaluationMatrix:
    keyword_index: int
    matrix: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape


def build_em(keyword_index: int, rows: Sequence[Sequence[int]]) -> EvaluationMatrix:
    """Stack per-provider match rows (one entry per token slot) for one keyword."""
    if not rows:
        raise EmptyInput("evaluation matrix needs at least one provider row")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise RaggedRows(f"keyword {keyword_index}: provider rows have differing widths {sorted(widths)}")
    m = np.asarray(rows, dtype=np.int64).reshape(len(rows), widths.pop())
    if ((m != 0) & (m != 1)).any():
        raise ValueError("evaluation matrix entries must be 0 or 1")
    return EvaluationMatrix(keyword_index, m)


def normalize_ev(em) -> List[Fraction]:
    """Per provider, the sum over token columns of its share of that column's matches (0/0 counts 0)."""
    m = em.matrix if isinstance(em, EvaluationMatrix) else np.asarray(em, dtype=np.int64)
    if m.ndim != 2:
        raise ValueError("evaluation matrix must be two-dimensional")
    colsum = m.sum(axis=0)
    return [
        sum((Fraction(int(m[i, j]), int(colsum[j])) for j in range(m.shape[1]) if colsum[j]), Fraction(0))
        for i in range(m.shape[0])
    ]


def aggregate(
    evs: Sequence[Sequence[Fraction]],
    weights: Sequence[Fraction],
    provider_ids: Sequence[str],
    hits: Optional[Mapping[str, Sequence[bool]]] = None,
    excluded: Sequence[str] = (),
) -> RankingResult:
    """score_i = sum over keywords of weight_w * EV_w[i]."""
    if not provider_ids:
        raise EmptyInput("no providers to rank")
    if len(evs) != len(weights):
        raise LengthMismatch(f"{len(evs)} evaluation vectors but {len(weights)} weights")
    for w, ev in enumerate(evs):
        if len(ev) != len(provider_ids):
            raise LengthMismatch(f"evaluation vector {w} has {len(ev)} entries for {len(provider_ids)} providers")
    for w in weights:
        if Fraction(w) < 0:
            raise ValueError("weights must be non-negative")
    hits = hits or {}
    entries = []
    for i, pid in enumerate(provider_ids):
        score = sum((Fraction(weights[w]) * Fraction(evs[w][i]) for w in range(len(evs))), Fraction(0))
        entries.append(RankingEntry(pid, score, list(hits.get(pid, []))))
    return _ordered(PRIORITIZED, entries, excluded)


def keyword_weights(labels: Sequence[str], weights: Mapping[str, Fraction]) -> List[Fraction]:
    """Broadcast each service's priority weight to the keywords under it."""
    return [Fraction(weights[label]) for label in labels]


def match_rows(ml: MatchList, n_slots: int) -> List[List[int]]:
    """One binary row per keyword over the provider's token slots."""
    return [[1 if hit == j else 0 for j in range(n_slots)] for hit in ml.hits]


def rank_prioritized(
    matchlists: Mapping[str, MatchList],
    slot_counts: Mapping[str, int],
    labels: Sequence[str],
    weights: Mapping[str, Fraction],
    excluded: Sequence[str] = (),
) -> RankingResult:
    """Full prioritized pipeline; shorter token lists are zero-padded to the widest one."""
    if not matchlists:
        raise EmptyInput("no provider match lists to rank")
    ids = sorted(matchlists)
    width = max(slot_counts[p] for p in ids)
    per_provider = {p: match_rows(matchlists[p], width) for p in ids}
    evs = []
    for w in range(len(labels)):
        em = build_em(w, [per_provider[p][w] for p in ids])
        evs.append(normalize_ev(em))
    return aggregate(
        evs,
        keyword_weights(labels, weights),
        ids,
        hits={p: matchlists[p].hit_flags for p in ids},
        excluded=excluded,
    )


def rank(
    scheme: str,
    matchlists: Mapping[str, MatchList],
    slot_counts: Mapping[str, int],
    labels: Sequence[str],
    weights: Mapping[str, Fraction],
    excluded: Sequence[str] = (),
) -> RankingResult:
    if scheme == BOOLEAN:
        return rank_boolean(matchlists, excluded)
    if scheme == PRIORITIZED:
        return rank_prioritized(matchlists, slot_counts, labels, weights, excluded)
    raise ValueError(f"unknown ranking scheme {scheme!r}, expected one of {SCHEMES}")
