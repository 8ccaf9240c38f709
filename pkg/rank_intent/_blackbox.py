"""Black-box ranker contract and the glass boxes whose intents are known.

Every glass box re-ranks the initial Dirichlet pool with an expanded query
q ∪ G_q, where G_q (the ground-truth intent) is derived per query:

- ``rm3-10`` / ``rm3-20``: relevance-model expansion from the top 10 / 20
  documents, re-ranked with Jelinek-Mercer smoothing.
- ``emb``: nearest embedding neighbours of the query centroid that occur in
  the top 10 documents, re-ranked with Jelinek-Mercer smoothing.
- ``desm``: a mix of smoothed query likelihood and embedding similarity
  between an IDF-weighted query vector and a TF-IDF-weighted document vector.
- ``planted``: the explanation ranker itself over intents read from a file.
"""

from __future__ import annotations

import logging
import math
import threading
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple, Protocol, runtime_checkable

import cachetools
import numpy as np

from rank_intent._embeddings import EmbeddingTable, cosine, mean_vector, nearest_terms
from rank_intent._errors import ConfigError, ContractError, DataError
from rank_intent._index import OOV_TOKEN, Document, Index, Query, dirichlet_retrieve
from rank_intent._rankers import DocRef, ExplanationRanker, expansion_terms, jm_score
from rank_intent._ranking import Ranking
from rank_intent._strategies import Agnosticism

logger = logging.getLogger(__name__)

INTENT_SIZE = 10
BLACKBOX_NAMES = ("rm3-10", "rm3-20", "emb", "desm", "planted")

_MISSING = object()


@dataclass(frozen=True)
class GroundTruthIntent:
    query_id: str
    terms: tuple[str, ...]
    source: str
    flags: tuple[str, ...] = ()
    weights: tuple[float, ...] | None = None


@runtime_checkable
class BlackBoxContract(Protocol):
    """What the explanation engine may ask of a ranker.

    ``rank`` is always available. ``score`` only works under weak
    agnosticism; a strong-agnostic ranker raises ContractError.
    """

    @property
    def name(self) -> str: ...
    @property
    def agnosticism(self) -> Agnosticism: ...
    def rank(self, query: Query, pool: Sequence[str] | None = None) -> Ranking: ...
    def score(self, query: Query, doc: DocRef) -> float: ...


class ScoreCacheInfo(NamedTuple):
    hits: int
    misses: int
    max_size: int
    current_size: int


class GlassBox(ABC):
    """A weak-agnostic ranker with a recoverable intent G_q.

    Immutable once built. Scores of indexed documents and per-query intents
    are memoised behind a lock, so instances can be shared across threads.
    """

    name: str = "glass-box"

    def __init__(
        self,
        index: Index,
        *,
        pool_size: int = 1000,
        mu: float = 2000.0,
        cache_size: int = 65_536,
    ) -> None:
        self.index = index
        self.pool_size = pool_size
        self.mu = mu
        self._lock = threading.Lock()
        self._scores: cachetools.LRUCache = cachetools.LRUCache(maxsize=cache_size)
        self._intents: cachetools.LRUCache = cachetools.LRUCache(maxsize=4096)
        self._initial: cachetools.LRUCache = cachetools.LRUCache(maxsize=4096)
        self._hits = 0
        self._misses = 0

    @property
    def agnosticism(self) -> Agnosticism:
        return Agnosticism.WEAK

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name!r}>"

    def initial_ranking(self, query: Query) -> Ranking:
        """Dirichlet top-``pool_size``: the pool every glass box re-ranks."""
        key = (query.query_id, query.terms)
        with self._lock:
            cached = self._initial.get(key, _MISSING)
        if cached is not _MISSING:
            return cached
        ranking = dirichlet_retrieve(self.index, query, self.pool_size, mu=self.mu)
        with self._lock:
            self._initial[key] = ranking
        return ranking

    def intent(self, query: Query) -> GroundTruthIntent:
        key = (query.query_id, query.terms)
        with self._lock:
            cached = self._intents.get(key, _MISSING)
        if cached is not _MISSING:
            return cached
        intent = self._expand(query)
        with self._lock:
            self._intents[key] = intent
        return intent

    @abstractmethod
    def _expand(self, query: Query) -> GroundTruthIntent: ...

    @abstractmethod
    def _score(self, query: Query, doc: Document) -> float: ...

    def score(self, query: Query, doc: DocRef) -> float:
        """S_BB(q, d). ``doc`` is an indexed doc_id or a (perturbed) Document."""
        if isinstance(doc, Document):
            return self._score(query, doc)
        key = (query.query_id, query.terms, doc)
        with self._lock:
            cached = self._scores.get(key, _MISSING)
            if cached is _MISSING:
                self._misses += 1
            else:
                self._hits += 1
        if cached is not _MISSING:
            return cached
        value = self._score(query, self.index.document(doc))
        with self._lock:
            self._scores[key] = value
        return value

    def rank(self, query: Query, pool: Sequence[str] | None = None) -> Ranking:
        """Re-rank ``pool`` (default: the initial Dirichlet pool) by S_BB, best first."""
        if pool is None:
            pool = self.initial_ranking(query).doc_ids
        scores = {doc_id: self.score(query, doc_id) for doc_id in pool}
        return Ranking.from_scores(query.query_id, scores, self.name)

    def strong(self) -> StrongAgnosticView:
        return StrongAgnosticView(self)

    def cache_info(self) -> ScoreCacheInfo:
        with self._lock:
            return ScoreCacheInfo(
                self._hits, self._misses, int(self._scores.maxsize), len(self._scores)
            )

    def cache_clear(self) -> None:
        with self._lock:
            self._scores.clear()
            self._intents.clear()
            self._initial.clear()
            self._hits = self._misses = 0

    def _top_vocabulary(self, query: Query, depth: int) -> tuple[set[str], tuple[str, ...]]:
        top = self.initial_ranking(query).top(depth)
        flags = ("short_feedback",) if len(top) < depth else ()
        vocab: set[str] = set()
        for doc in self.index.documents(top.doc_ids):
            vocab.update(doc.tf)
        vocab.discard(OOV_TOKEN)
        return vocab, flags


class StrongAgnosticView:
    """Exposes only the ordering of the wrapped ranker."""

    def __init__(self, inner: GlassBox) -> None:
        self._inner = inner

    @property
    def name(self) -> str:
        return self._inner.name

    @property
    def agnosticism(self) -> Agnosticism:
        return Agnosticism.STRONG

    @property
    def index(self) -> Index:
        return self._inner.index

    def __repr__(self) -> str:
        return f"<StrongAgnosticView of {self._inner!r}>"

    def initial_ranking(self, query: Query) -> Ranking:
        return self._inner.initial_ranking(query)

    def intent(self, query: Query) -> GroundTruthIntent:
        return self._inner.intent(query)

    def rank(self, query: Query, pool: Sequence[str] | None = None) -> Ranking:
        return self._inner.rank(query, pool).without_scores()

    def score(self, query: Query, doc: DocRef) -> float:
        raise ContractError(f"{self.name!r} is strongly agnostic: scores are unavailable")


def _relevance_weights(index: Index, query: Query, top: Ranking, alpha: float) -> dict[str, float]:
    docs = index.documents(top.doc_ids)
    log_ql = np.array([jm_score(index, query.terms, d, alpha) for d in docs])
    # shift by the max before exponentiating; the normalisation below cancels it
    doc_weight = np.exp(log_ql - log_ql.max())

    weights: dict[str, float] = {}
    for doc, dw in zip(docs, doc_weight, strict=True):
        if doc.length == 0:
            continue
        for term, tf in doc.tf.items():
            if term == OOV_TOKEN:
                continue
            weights[term] = weights.get(term, 0.0) + (tf / doc.length) * float(dw)
    total = sum(weights.values())
    if total == 0.0:
        raise DataError(f"query {query.query_id!r}: feedback documents are empty")
    return {t: w / total for t, w in weights.items()}


def _feedback(query: Query, initial: Ranking, feedback_depth: int) -> tuple[Ranking, list[str]]:
    top = initial.top(feedback_depth)
    if top.is_empty:
        raise DataError(f"query {query.query_id!r}: no feedback documents")
    flags = []
    if len(top) < feedback_depth:
        logger.warning(
            "query %r: %d feedback docs, wanted %d", query.query_id, len(top), feedback_depth
        )
        flags.append("short_feedback")
    return top, flags


def rm3_expand(
    index: Index,
    query: Query,
    initial: Ranking,
    feedback_depth: int,
    n_terms: int = INTENT_SIZE,
    *,
    alpha: float = 0.4,
    source: str | None = None,
) -> GroundTruthIntent:
    """Relevance-model expansion terms from the top ``feedback_depth`` documents.

    P(w|R) is proportional to the sum over feedback documents of
    P_mle(w|d) times the Jelinek-Mercer query likelihood of d. Query terms
    stay eligible. Ties go to the lexicographically smaller term. Feedback
    documents with fewer than ``n_terms`` distinct terms give a shorter
    intent flagged ``undersized``.
    """
    top, flags = _feedback(query, initial, feedback_depth)
    weights = _relevance_weights(index, query, top, alpha)
    ranked = sorted((-w, t) for t, w in weights.items())[:n_terms]
    if len(ranked) < n_terms:
        logger.warning(
            "query %r: relevance model has %d terms, wanted %d",
            query.query_id,
            len(ranked),
            n_terms,
        )
        flags.append("undersized")
    return GroundTruthIntent(
        query.query_id,
        tuple(t for _, t in ranked),
        source or f"rm3-{feedback_depth}",
        tuple(flags),
        tuple(-w for w, _ in ranked),
    )


def relevance_model(
    index: Index, query: Query, initial: Ranking, feedback_depth: int, *, alpha: float = 0.4
) -> dict[str, float]:
    """The full normalised P(w|R) before truncation."""
    top, _ = _feedback(query, initial, feedback_depth)
    return _relevance_weights(index, query, top, alpha)


def emb_expand(
    table: EmbeddingTable,
    query: Query,
    top_vocabulary: set[str],
    n_terms: int = INTENT_SIZE,
    *,
    source: str = "emb",
) -> GroundTruthIntent:
    """Nearest neighbours of the plain query centroid among the top documents' terms.

    Raises:
        DataError: no query term has an embedding.
    """
    qv = mean_vector(table, query.terms)
    nearest = nearest_terms(table, qv, top_vocabulary, n_terms)
    return GroundTruthIntent(
        query.query_id, nearest.terms, source, nearest.flags, nearest.similarities
    )


def desm_ground_truth(
    table: EmbeddingTable,
    index: Index,
    query: Query,
    top_vocabulary: set[str],
    n_terms: int = INTENT_SIZE,
) -> GroundTruthIntent:
    """Nearest neighbours of the IDF-weighted (unexpanded) query vector."""
    qv = mean_vector(table, query.terms, {t: index.idf(t) for t in query.terms})
    nearest = nearest_terms(table, qv, top_vocabulary, n_terms)
    return GroundTruthIntent(
        query.query_id, nearest.terms, "desm", nearest.flags, nearest.similarities
    )


class RM3BlackBox(GlassBox):
    def __init__(
        self, index: Index, feedback_depth: int = 10, *, alpha: float = 0.4, **kwargs
    ) -> None:
        super().__init__(index, **kwargs)
        if feedback_depth < 1:
            raise ConfigError(f"feedback_depth must be >= 1, got {feedback_depth}")
        self.feedback_depth = feedback_depth
        self.alpha = alpha
        self.name = f"rm3-{feedback_depth}"

    def _expand(self, query: Query) -> GroundTruthIntent:
        return rm3_expand(
            self.index, query, self.initial_ranking(query), self.feedback_depth, alpha=self.alpha
        )

    def _score(self, query: Query, doc: Document) -> float:
        terms = expansion_terms(query, self.intent(query).terms)
        return jm_score(self.index, terms, doc, self.alpha)


class EmbBlackBox(GlassBox):
    name = "emb"

    def __init__(
        self, index: Index, embeddings: EmbeddingTable, *, alpha: float = 0.4, **kwargs
    ) -> None:
        super().__init__(index, **kwargs)
        self.embeddings = embeddings
        self.alpha = alpha

    def _expand(self, query: Query) -> GroundTruthIntent:
        vocab, flags = self._top_vocabulary(query, 10)
        intent = emb_expand(self.embeddings, query, vocab)
        if flags:
            intent = GroundTruthIntent(
                intent.query_id, intent.terms, intent.source, intent.flags + flags, intent.weights
            )
        return intent

    def _score(self, query: Query, doc: Document) -> float:
        terms = expansion_terms(query, self.intent(query).terms)
        return jm_score(self.index, terms, doc, self.alpha)


class DesmBlackBox(GlassBox):
    """Mix of smoothed query likelihood (weight gamma) and query/document cosine."""

    name = "desm"

    def __init__(
        self,
        index: Index,
        embeddings: EmbeddingTable,
        *,
        gamma: float = 0.9,
        delta: float = 1.0,
        **kwargs,
    ) -> None:
        super().__init__(index, **kwargs)
        if not 0.0 <= gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {gamma}")
        self.embeddings = embeddings
        self.gamma = gamma
        self._mle = ExplanationRanker(index, delta)
        self._query_vectors: cachetools.LRUCache = cachetools.LRUCache(maxsize=4096)

    def _expand(self, query: Query) -> GroundTruthIntent:
        vocab, flags = self._top_vocabulary(query, 50)
        intent = desm_ground_truth(self.embeddings, self.index, query, vocab)
        if flags:
            intent = GroundTruthIntent(
                intent.query_id, intent.terms, intent.source, intent.flags + flags, intent.weights
            )
        return intent

    def query_vector(self, query: Query) -> np.ndarray:
        """IDF-weighted mean over q ∪ G_q."""
        key = (query.query_id, query.terms)
        with self._lock:
            cached = self._query_vectors.get(key, _MISSING)
        if cached is not _MISSING:
            return cached
        terms = expansion_terms(query, self.intent(query).terms)
        vec = mean_vector(self.embeddings, terms, {t: self.index.idf(t) for t in terms})
        with self._lock:
            self._query_vectors[key] = vec
        return vec

    def document_vector(self, doc: Document) -> np.ndarray | None:
        """TF-IDF-weighted mean of the embedded document terms, None if there are none."""
        terms = sorted(t for t in doc.tf if t in self.embeddings)
        if not terms:
            return None
        weights = {t: doc.tf[t] * self.index.idf(t) for t in terms}
        return mean_vector(self.embeddings, terms, weights)

    def _score(self, query: Query, doc: Document) -> float:
        return desm_score(
            query,
            doc,
            mle=self._mle,
            query_vector=self.query_vector(query),
            doc_vector=self.document_vector(doc),
            gamma=self.gamma,
        )


def desm_score(
    query: Query,
    doc: Document,
    *,
    mle: ExplanationRanker,
    query_vector: np.ndarray,
    doc_vector: np.ndarray | None,
    gamma: float = 0.9,
) -> float:
    """gamma * prod_i P(q_i|d) + (1 - gamma) * cos(query vector, document vector).

    The product runs over the original query terms with delta-smoothed
    estimates, multiplied in log space. A document without embedded terms
    has no semantic part.
    """
    syntactic = math.exp(sum(mle.term_score(t, doc) for t in query.terms))
    semantic = 0.0 if doc_vector is None else cosine(query_vector, doc_vector)
    return gamma * syntactic + (1.0 - gamma) * semantic


class PlantedBlackBox(GlassBox):
    """The explanation ranker scoring q ∪ G_q for externally supplied intents."""

    name = "planted"

    def __init__(
        self, index: Index, intents: Mapping[str, Sequence[str]], *, delta: float = 1.0, **kwargs
    ) -> None:
        super().__init__(index, **kwargs)
        self.intents = {qid: tuple(terms) for qid, terms in intents.items()}
        self.ranker = ExplanationRanker(index, delta)

    def _expand(self, query: Query) -> GroundTruthIntent:
        try:
            terms = self.intents[query.query_id]
        except KeyError:
            raise DataError(f"no planted intent for query {query.query_id!r}") from None
        flags = () if len(terms) == INTENT_SIZE else ("undersized",)
        return GroundTruthIntent(query.query_id, terms, self.name, flags)

    def _score(self, query: Query, doc: Document) -> float:
        return self.ranker.score_expanded(query, self.intent(query).terms, doc)


def make_blackbox(
    name: str,
    index: Index,
    *,
    embeddings: EmbeddingTable | None = None,
    intents: Mapping[str, Sequence[str]] | None = None,
    alpha: float = 0.4,
    gamma: float = 0.9,
    delta: float = 1.0,
    mu: float = 2000.0,
    pool_size: int = 1000,
) -> GlassBox:
    """Build a glass box by its configuration name."""
    common = {"pool_size": pool_size, "mu": mu}
    key = name.strip().lower()
    if key.startswith("rm3-"):
        try:
            depth = int(key.removeprefix("rm3-"))
        except ValueError:
            raise ConfigError(f"Unknown black box: {name!r}") from None
        return RM3BlackBox(index, depth, alpha=alpha, **common)
    if key in ("emb", "desm"):
        if embeddings is None:
            raise ConfigError(f"black box {key!r} needs an embeddings file")
        if key == "emb":
            return EmbBlackBox(index, embeddings, alpha=alpha, **common)
        return DesmBlackBox(index, embeddings, gamma=gamma, delta=delta, **common)
    if key == "planted":
        if intents is None:
            raise ConfigError("black box 'planted' needs an intents file")
        return PlantedBlackBox(index, intents, delta=delta, **common)
    raise ConfigError(f"Unknown black box: {name!r}. Use one of: {', '.join(BLACKBOX_NAMES)}.")


def bb_rank(blackbox: BlackBoxContract, query: Query, pool: Sequence[str] | None = None) -> Ranking:
    """The black box's ordering of ``pool``; scores survive only under weak agnosticism.

    Raises:
        ContractError: ``blackbox`` does not implement the ranker contract.
    """
    if not isinstance(blackbox, BlackBoxContract):
        raise ContractError(f"{type(blackbox).__name__} does not implement BlackBoxContract")
    ranking = blackbox.rank(query, pool)
    if blackbox.agnosticism == Agnosticism.STRONG and ranking.has_scores:
        ranking = ranking.without_scores()
    return ranking
