"""Tokenizer, immutable inverted index and Dirichlet-smoothed initial retrieval."""

from __future__ import annotations

import functools
import json
import logging
import math
import os
import re
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from types import MappingProxyType

from rank_intent._errors import ConfigError, DataError
from rank_intent._io import atomic_write_text, dump_json
from rank_intent._ranking import Ranking

logger = logging.getLogger(__name__)

# Angle brackets never survive tokenization, so this can't collide with a real term.
OOV_TOKEN = "<oov>"
MIN_TOKEN_LENGTH = 2
INDEX_FORMAT = 1

_ALNUM_RUN = re.compile(r"[^\W_]+")


@functools.cache
def stopwords() -> frozenset[str]:
    text = resources.files("rank_intent").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@functools.cache
def _porter():
    try:
        from nltk.stem import PorterStemmer
    except ImportError:
        raise ConfigError(
            "stemming needs nltk; install the 'stem' extra (pip install rank_intent[stem])"
        ) from None
    return PorterStemmer()


def tokenize(text: str, *, stem: bool = False) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop short tokens and stopwords.

    With ``stem=True`` the surviving tokens are Porter-stemmed.
    """
    stop = stopwords()
    tokens = [
        t
        for t in _ALNUM_RUN.findall(text.lower())
        if len(t) >= MIN_TOKEN_LENGTH and t not in stop
    ]
    if stem:
        porter = _porter()
        tokens = [s for s in (porter.stem(t) for t in tokens) if len(s) >= MIN_TOKEN_LENGTH]
    return tokens


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.tokens)

    @cached_property
    def tf(self) -> Counter[str]:
        return Counter(self.tokens)

    def with_tokens(self, tokens: Sequence[str]) -> Document:
        return Document(self.doc_id, tuple(tokens))


@dataclass(frozen=True)
class Query:
    query_id: str
    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise DataError(f"query {self.query_id!r} is empty after tokenization")

    @classmethod
    def parse(cls, query_id: str, text: str, *, stem: bool = False) -> Query:
        return cls(query_id, tuple(tokenize(text, stem=stem)))

    @property
    def term_set(self) -> frozenset[str]:
        return frozenset(self.terms)


class Index:
    """Immutable bag-of-words index over a document collection.

    Statistics do not depend on the order documents were supplied in:
    documents and postings are stored sorted by doc_id.
    """

    def __init__(self, documents: Iterable[Document], *, stem: bool = False) -> None:
        docs: dict[str, Document] = {}
        for doc in documents:
            if doc.doc_id in docs:
                raise DataError(f"duplicate doc_id {doc.doc_id!r}")
            docs[doc.doc_id] = doc
        ordered = sorted(docs)

        postings: dict[str, list[tuple[str, int]]] = {}
        cf: Counter[str] = Counter()
        for doc_id in ordered:
            for term, count in sorted(docs[doc_id].tf.items()):
                postings.setdefault(term, []).append((doc_id, count))
                cf[term] += count

        self.stem = stem
        self._docs = MappingProxyType({d: docs[d] for d in ordered})
        self.doc_ids: tuple[str, ...] = tuple(ordered)
        self.postings: Mapping[str, tuple[tuple[str, int], ...]] = MappingProxyType(
            {t: tuple(p) for t, p in sorted(postings.items())}
        )
        self.doc_lengths: Mapping[str, int] = MappingProxyType(
            {d: docs[d].length for d in ordered}
        )
        self.collection_freq: Mapping[str, int] = MappingProxyType(dict(sorted(cf.items())))
        self.vocabulary: frozenset[str] = frozenset(self.postings) - {OOV_TOKEN}
        self.total_tokens: int = sum(self.doc_lengths.values())

    @property
    def doc_count(self) -> int:
        return len(self._docs)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def __len__(self) -> int:
        return self.doc_count

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self._docs

    def __repr__(self) -> str:
        return (
            f"<Index docs={self.doc_count} vocab={self.vocab_size} "
            f"tokens={self.total_tokens} stem={self.stem}>"
        )

    def document(self, doc_id: str) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise DataError(f"unknown doc_id {doc_id!r}") from None

    def documents(self, doc_ids: Iterable[str] | None = None) -> list[Document]:
        if doc_ids is None:
            return list(self._docs.values())
        return [self.document(d) for d in doc_ids]

    def tf(self, term: str, doc_id: str) -> int:
        return self.document(doc_id).tf.get(term, 0)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def cf(self, term: str) -> int:
        return self.collection_freq.get(term, 0)

    def idf(self, term: str) -> float:
        """ln((N + 1) / (df + 1)) + 1, defined for unseen terms too."""
        return math.log((self.doc_count + 1) / (self.df(term) + 1)) + 1.0

    def collection_prob(self, term: str) -> float:
        if self.total_tokens == 0:
            return 0.0
        return self.cf(term) / self.total_tokens

    def save(self, path: str | os.PathLike[str]) -> None:
        payload = {
            "format": INDEX_FORMAT,
            "stem": self.stem,
            "documents": [{"id": d.doc_id, "tokens": list(d.tokens)} for d in self._docs.values()],
        }
        atomic_write_text(path, dump_json(payload))
        logger.info("saved %r to %s", self, path)

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> Index:
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not an index file ({exc})") from None
        if payload.get("format") != INDEX_FORMAT:
            raise DataError(f"{path}: unsupported index format {payload.get('format')!r}")
        docs = (Document(str(d["id"]), tuple(d["tokens"])) for d in payload["documents"])
        return cls(docs, stem=bool(payload.get("stem", False)))


def build_index(documents: Iterable[tuple[str, str]], *, stem: bool = False) -> Index:
    """Tokenize ``(doc_id, text)`` pairs and index them.

    Raises:
        DataError: a doc_id appears twice.
    """
    index = Index(
        (Document(doc_id, tuple(tokenize(text, stem=stem))) for doc_id, text in documents),
        stem=stem,
    )
    logger.info("built %r", index)
    return index


def dirichlet_score(index: Index, terms: Sequence[str], doc_id: str, mu: float = 2000.0) -> float:
    """Query log-likelihood under Dirichlet smoothing.

    Terms absent from the collection are skipped; they would add log(0) to
    every document alike.
    """
    doc = index.document(doc_id)
    score = 0.0
    for term in terms:
        p_coll = index.collection_prob(term)
        if p_coll == 0.0:
            continue
        score += math.log((doc.tf.get(term, 0) + mu * p_coll) / (doc.length + mu))
    return score


def dirichlet_retrieve(
    index: Index, query: Query, pool_size: int = 1000, *, mu: float = 2000.0
) -> Ranking:
    """Initial retrieval: documents matching at least one query term, best first.

    Raises:
        DataError: the index is empty.
        ConfigError: pool_size < 1 or mu <= 0.
    """
    if index.doc_count == 0:
        raise DataError("cannot retrieve from an empty index")
    if pool_size < 1:
        raise ConfigError(f"pool_size must be >= 1, got {pool_size}")
    if mu <= 0:
        raise ConfigError(f"mu must be positive, got {mu}")

    matched = {doc_id for term in query.terms for doc_id, _ in index.postings.get(term, ())}
    if not matched:
        logger.warning("query %r has no term in the vocabulary", query.query_id)
        return Ranking(query.query_id, (), "dirichlet", ("no_vocabulary_match",))

    scores = {doc_id: dirichlet_score(index, query.terms, doc_id, mu) for doc_id in matched}
    return Ranking.from_scores(query.query_id, scores, "dirichlet", limit=pool_size)
