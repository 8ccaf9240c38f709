"""The explanation ranker R_E and the Jelinek-Mercer scorer the glass boxes share."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np

from rank_intent._errors import ConfigError
from rank_intent._index import Document, Index, Query
from rank_intent._ranking import Ranking

# Per-term log-probability used when both the document and the collection
# probability are zero (only perturbation tokens get there).
LOG_FLOOR = -700.0

DocRef = Document | str


def _doc(index: Index, doc: DocRef) -> Document:
    return doc if isinstance(doc, Document) else index.document(doc)


def expansion_terms(query: Query, expansion: Iterable[str]) -> tuple[str, ...]:
    """q ∪ T as a sorted tuple: each term once, fixed summation order."""
    return tuple(sorted(query.term_set.union(expansion)))


class ExplanationRanker:
    """Additively smoothed unigram language model.

    ``term_score(w, d) = log((tf(w, d) + delta) / (|d| + delta * |V|))`` and a
    query scores as the sum over its distinct terms, so every term contributes
    independently of the others.
    """

    def __init__(self, index: Index, delta: float = 1.0) -> None:
        if not delta > 0:
            raise ConfigError(f"delta must be positive, got {delta}")
        self.index = index
        self.delta = float(delta)
        self._smoothed_vocab = self.delta * max(index.vocab_size, 1)

    def __repr__(self) -> str:
        return f"<ExplanationRanker delta={self.delta} vocab={self.index.vocab_size}>"

    def term_score(self, term: str, doc: DocRef) -> float:
        d = _doc(self.index, doc)
        return math.log((d.tf.get(term, 0) + self.delta) / (d.length + self._smoothed_vocab))

    def score_terms(self, terms: Iterable[str], doc: DocRef) -> float:
        d = _doc(self.index, doc)
        return sum(self.term_score(t, d) for t in sorted(set(terms)))

    def score_expanded(self, query: Query, expansion: Iterable[str], doc: DocRef) -> float:
        """Score of ``doc`` for the expanded query q ∪ T."""
        d = _doc(self.index, doc)
        return sum(self.term_score(t, d) for t in expansion_terms(query, expansion))

    def rank_expanded(
        self, query: Query, expansion: Iterable[str], pool: Sequence[str]
    ) -> Ranking:
        terms = expansion_terms(query, expansion)
        scores = {doc_id: self.score_terms(terms, doc_id) for doc_id in pool}
        return Ranking.from_scores(query.query_id, scores, "explanation")

    def score_matrix(self, terms: Sequence[str], doc_ids: Sequence[str]) -> np.ndarray:
        """``len(terms) x len(doc_ids)`` array of term_score values."""
        docs = [self.index.document(d) for d in doc_ids]
        tf = np.array([[d.tf.get(t, 0) for d in docs] for t in terms], dtype=np.float64)
        lengths = np.array([d.length for d in docs], dtype=np.float64)
        if tf.size == 0:
            return tf.reshape(len(terms), len(docs))
        return np.log((tf + self.delta) / (lengths + self._smoothed_vocab))


def jm_term_score(index: Index, term: str, doc: Document, alpha: float) -> float:
    """log(alpha * P_mle(w|d) + (1 - alpha) * P(w|D))."""
    p_doc = doc.tf.get(term, 0) / doc.length if doc.length else 0.0
    p = alpha * p_doc + (1.0 - alpha) * index.collection_prob(term)
    return math.log(p) if p > 0.0 else LOG_FLOOR


def jm_score(index: Index, terms: Iterable[str], doc: DocRef, alpha: float = 0.4) -> float:
    """Jelinek-Mercer query log-likelihood with ``alpha`` on the document model.

    ``terms`` is scored as given (a query's term sequence or a q ∪ T set).
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    d = _doc(index, doc)
    return sum(jm_term_score(index, t, d, alpha) for t in terms)

