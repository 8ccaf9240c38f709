"""Candidate expansion terms: TF-IDF selection, then perturbation filters.

Stage I ranks the terms of the retrieved pool by TF-IDF. Under weak
agnosticism two filters query the black box on perturbed documents:
reductive (occurrences of a term replaced by an out-of-vocabulary token,
so the length is unchanged) and additive (a term appended ``n`` times).
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TypeVar

import numpy as np

from rank_intent._blackbox import BlackBoxContract
from rank_intent._errors import ConfigError, ContractError, DataError
from rank_intent._index import OOV_TOKEN, Document, Index, Query
from rank_intent._ranking import Ranking
from rank_intent._strategies import Agnosticism

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class CandidateSet:
    """Candidate terms in selection order.

    ``scores`` holds the value each term was selected by (TF-IDF for stage I,
    the mean score change for the filters; absent for terms a filter could
    not observe). ``tfidf`` is carried along for tie-breaking and export.
    """

    terms: tuple[str, ...]
    stage: str
    provenance: str
    scores: Mapping[str, float]
    tfidf: Mapping[str, float]
    flags: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.scores or term in set(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def without(self, excluded: Iterable[str]) -> tuple[str, ...]:
        drop = set(excluded)
        return tuple(t for t in self.terms if t not in drop)


def tfidf_candidates(index: Index, pool: Sequence[str], cap: int = 1000) -> CandidateSet:
    """Top ``cap`` pool terms by (summed pool tf) * idf, ties by term.

    Raises:
        DataError: empty pool.
    """
    if not pool:
        raise DataError("cannot select candidates from an empty pool")
    if cap < 1:
        raise ConfigError(f"cap must be >= 1, got {cap}")
    tf: Counter[str] = Counter()
    for doc in index.documents(pool):
        tf.update(doc.tf)
    tf.pop(OOV_TOKEN, None)
    scored = sorted(((-count * index.idf(term), term) for term, count in tf.items()))
    flags: tuple[str, ...] = ()
    if len(scored) < cap:
        flags = ("undersized",)
    top = scored[:cap]
    scores = {term: -neg for neg, term in top}
    return CandidateSet(tuple(t for _, t in top), "I", "tfidf", scores, scores, flags)


def perturb_reduce(doc: Document, term: str) -> Document:
    """Replace every occurrence of ``term`` with the OOV token; length is preserved.

    Raises:
        DataError: ``term`` does not occur in ``doc``.
    """
    if term not in doc.tf:
        raise DataError(f"{term!r} does not occur in {doc.doc_id!r}")
    return doc.with_tokens([OOV_TOKEN if t == term else t for t in doc.tokens])


def perturb_add(doc: Document, term: str, n: int) -> Document:
    """Append ``n`` copies of ``term``."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    return doc.with_tokens(doc.tokens + (term,) * n)


def reductive_sample(
    ranking: Ranking, k: int = 10, extra: int = 40, rng: np.random.Generator | None = None
) -> tuple[str, ...]:
    """The top ``k`` documents plus one uniform draw from each of ``extra`` rank strata.

    The strata split the rest of the ranking into equal-width rank bands, so
    the extra documents spread over the whole list. If fewer than ``extra``
    documents remain, all of them are taken.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    head = ranking.doc_ids[:k]
    rest = ranking.doc_ids[k:]
    if len(rest) <= extra:
        return head + rest
    bounds = np.linspace(0, len(rest), extra + 1).astype(int)
    picks = [int(rng.integers(lo, hi)) for lo, hi in zip(bounds[:-1], bounds[1:], strict=True)]
    return head + tuple(rest[i] for i in picks)


def _require_weak(blackbox: BlackBoxContract) -> None:
    if blackbox.agnosticism != Agnosticism.WEAK:
        raise ContractError(
            f"{blackbox.name!r} is strongly agnostic: document perturbation needs scores"
        )


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """``fn`` over ``items`` on up to ``workers`` threads; results keep the item order."""
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _select(
    candidates: CandidateSet,
    deltas: Mapping[str, float | None],
    keep: int,
    *,
    unobserved_first: bool,
) -> tuple[tuple[str, ...], int]:
    """Order survivors: positive deltas by (-delta, -tfidf, term), plus unobserved terms."""
    positives = sorted(
        (t for t, d in deltas.items() if d is not None and d > 0.0),
        key=lambda t: (-deltas[t], -candidates.tfidf.get(t, 0.0), t),  # type: ignore[operator]
    )
    unobserved = [t for t in candidates.terms if deltas[t] is None]
    ordered = unobserved + positives if unobserved_first else positives + unobserved
    return tuple(ordered[:keep]), len(positives)


def reductive_filter(
    candidates: CandidateSet,
    blackbox: BlackBoxContract,
    query: Query,
    ranking: Ranking,
    *,
    keep: int = 500,
    k: int = 10,
    extra_sample: int = 40,
    rng: np.random.Generator | None = None,
    workers: int = 1,
) -> CandidateSet:
    """Keep the terms whose removal lowers the black-box score on average.

    For each candidate, the mean of S_BB(q, d) - S_BB(q, d') over the sampled
    documents containing it. Candidates no sampled document contains are kept
    after the positive ones.

    Raises:
        ContractError: the black box does not expose scores.
    """
    _require_weak(blackbox)
    index: Index = blackbox.index  # type: ignore[attr-defined]
    sample = index.documents(reductive_sample(ranking, k, extra_sample, rng))
    logger.info(
        "query %r: reductive filter over %d candidates, %d sampled docs",
        query.query_id,
        len(candidates),
        len(sample),
    )

    def delta(term: str) -> float | None:
        containing = [d for d in sample if term in d.tf]
        if not containing:
            return None
        drops = [
            blackbox.score(query, d.doc_id) - blackbox.score(query, perturb_reduce(d, term))
            for d in containing
        ]
        return float(np.mean(drops))

    observed = parallel_map(delta, candidates.terms, workers)
    deltas = dict(zip(candidates.terms, observed, strict=True))
    kept, n_pos = _select(candidates, deltas, keep, unobserved_first=False)
    return _filtered(candidates, kept, deltas, n_pos, keep, "reductive")


def additive_filter(
    candidates: CandidateSet,
    blackbox: BlackBoxContract,
    query: Query,
    top_docs: Sequence[str],
    *,
    n_add: int = 5,
    keep: int = 250,
    workers: int = 1,
) -> CandidateSet:
    """Keep the terms whose insertion raises the black-box score on average.

    For each candidate, the mean of S_BB(q, d') - S_BB(q, d) over the top
    documents lacking it, with ``d'`` the document plus ``n_add`` copies.
    Candidates every top document already contains bypass the filter.

    Raises:
        ContractError: the black box does not expose scores.
    """
    _require_weak(blackbox)
    index: Index = blackbox.index  # type: ignore[attr-defined]
    docs = index.documents(top_docs)
    logger.info(
        "query %r: additive filter over %d candidates, %d docs, n=%d",
        query.query_id,
        len(candidates),
        len(docs),
        n_add,
    )

    def delta(term: str) -> float | None:
        missing = [d for d in docs if term not in d.tf]
        if not missing:
            return None
        gains = [
            blackbox.score(query, perturb_add(d, term, n_add)) - blackbox.score(query, d.doc_id)
            for d in missing
        ]
        return float(np.mean(gains))

    observed = parallel_map(delta, candidates.terms, workers)
    deltas = dict(zip(candidates.terms, observed, strict=True))
    kept, n_pos = _select(candidates, deltas, keep, unobserved_first=True)
    return _filtered(candidates, kept, deltas, n_pos, keep, "additive")


def _filtered(
    candidates: CandidateSet,
    kept: tuple[str, ...],
    deltas: Mapping[str, float | None],
    n_positive: int,
    keep: int,
    provenance: str,
) -> CandidateSet:
    flags: list[str] = []
    n_unobserved = sum(1 for d in deltas.values() if d is None)
    if n_positive < keep:
        flags.append("few_positive")
    if n_unobserved:
        flags.append(f"unobserved:{n_unobserved}")
    scores = {t: d for t, d in deltas.items() if t in set(kept) and d is not None}
    logger.info(
        "%s filter kept %d of %d (%d positive, %d unobserved)",
        provenance,
        len(kept),
        len(candidates),
        n_positive,
        n_unobserved,
    )
    return CandidateSet(
        kept,
        "II",
        provenance,
        scores,
        {t: candidates.tfidf[t] for t in kept if t in candidates.tfidf},
        tuple(flags),
    )
