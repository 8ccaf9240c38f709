"""Seeded synthetic collections with planted query intents.

Every topic owns two query terms, ten intent terms and ten distractor
terms. A topic's documents form a grade: walking from the best document
to the worst, each step drops one occurrence of a single intent term (or
of the first query term) and adds one distractor occurrence in its place.
All documents of a topic therefore have the same length, and they share
one Zipfian background sample. Intent terms drop in runs of two: the last
intent term only separates the top three documents, the others spread
down the grade, and the first query term takes the remaining steps.
Under the planted black box the grade is the ranking, without ties.

Background documents carry only Zipfian text and between them use every
background word. None of them contains a query term.

Embeddings place a topic's query terms close to a topic centroid and its
intent terms a little further out; everything else is random.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from rank_intent._blackbox import INTENT_SIZE
from rank_intent._config import ExperimentConfig
from rank_intent._embeddings import EmbeddingTable, save_embeddings
from rank_intent._index import Index, build_index
from rank_intent._io import write_corpus, write_intents, write_queries

logger = logging.getLogger(__name__)

QUERY_TERMS_PER_TOPIC = 2


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int = 0
    n_topics: int = 25
    docs_per_topic: int = 24
    vocab_size: int = 2500
    dim: int = 32
    zipf_exponent: float = 1.1
    min_length: int = 60
    max_length: int = 140
    background_docs: int = 100


@dataclass(frozen=True)
class SyntheticCollection:
    documents: tuple[tuple[str, str], ...]
    queries: tuple[tuple[str, str], ...]
    intents: dict[str, tuple[str, ...]]
    embeddings: EmbeddingTable
    spec: SyntheticSpec = field(default_factory=SyntheticSpec)

    def index(self, *, stem: bool = False) -> Index:
        return build_index(self.documents, stem=stem)

    def write(self, directory: str | os.PathLike[str]) -> dict[str, str]:
        """Write corpus, queries, intents and embeddings; return their paths by config key."""
        root = Path(directory)
        paths = {
            "corpus_path": str(root / "corpus.jsonl"),
            "queries_path": str(root / "queries.tsv"),
            "intents_path": str(root / "intents.tsv"),
            "embeddings_path": str(root / "embeddings.txt"),
        }
        write_corpus(paths["corpus_path"], self.documents)
        write_queries(paths["queries_path"], self.queries)
        write_intents(paths["intents_path"], sorted(self.intents.items()))
        save_embeddings(paths["embeddings_path"], self.embeddings)
        logger.info("wrote synthetic collection to %s", root)
        return paths

    def config(self, directory: str | os.PathLike[str], **overrides) -> ExperimentConfig:
        """Write the collection and return a planted-black-box config pointing at it."""
        values = {
            **self.write(directory),
            "blackbox": "planted",
            "output_dir": str(Path(directory) / "runs"),
            "seed": self.spec.seed,
        }
        values.update(overrides)
        return ExperimentConfig.from_mapping(values, explicit=frozenset(overrides))


def topic_terms(topic: int) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
    """(query, intent, distractor) terms of a topic."""
    prefix = f"t{topic:02d}"
    return (
        tuple(f"{prefix}q{j}" for j in range(QUERY_TERMS_PER_TOPIC)),
        tuple(f"{prefix}i{j}" for j in range(INTENT_SIZE)),
        tuple(f"{prefix}n{j}" for j in range(INTENT_SIZE)),
    )


def grade_steps(query: Sequence[str], intent: Sequence[str], n_docs: int) -> list[str]:
    """The term dropped between grade positions ``j`` and ``j + 1``, for every ``j``.

    Each term drops twice in a row: the last intent term first, then the
    other intent terms in order, then the first query term, which also takes
    any steps left over.
    """
    steps: list[str] = []
    for term in (intent[-1], *intent[:-1], query[0]):
        steps += [term, term]
    steps += [query[0]] * (n_docs - 1 - len(steps))
    return steps[: max(n_docs - 1, 0)]


def graded_topic(
    query: Sequence[str], intent: Sequence[str], noise: Sequence[str], n_docs: int
) -> list[list[str]]:
    """Topic tokens per grade position, best first, without the background sample."""
    steps = grade_steps(query, intent, n_docs)
    constant = [t for t in intent if t not in set(steps)]
    bags = []
    for position in range(n_docs):
        tokens = [*query, *constant]
        for j, term in enumerate(steps):
            tokens.append(term if j >= position else noise[j % len(noise)])
        bags.append(tokens)
    return bags


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_collection(spec: SyntheticSpec | None = None, **overrides) -> SyntheticCollection:
    """Build a collection deterministically from ``spec`` with keyword overrides applied."""
    if spec is None:
        spec = SyntheticSpec(**overrides)
    elif overrides:
        spec = replace(spec, **overrides)
    rng = np.random.default_rng(spec.seed)
    background = [f"w{i:04d}" for i in range(spec.vocab_size)]
    ranks = np.arange(1, spec.vocab_size + 1, dtype=np.float64)
    zipf = ranks**-spec.zipf_exponent
    zipf /= zipf.sum()

    def sample() -> list[str]:
        length = int(rng.integers(spec.min_length, spec.max_length + 1))
        return [background[i] for i in rng.choice(spec.vocab_size, size=length, p=zipf)]

    topics = [topic_terms(t) for t in range(spec.n_topics)]
    bags: list[list[str]] = []
    for query, intent, noise in topics:
        shared = sample()
        grade = graded_topic(query, intent, noise, spec.docs_per_topic)
        # document ids don't follow the grade
        bags += [grade[p] + shared for p in rng.permutation(spec.docs_per_topic)]

    extra = [sample() for _ in range(spec.background_docs)]
    if extra:
        seen = {w for bag in bags + extra for w in bag}
        for i, word in enumerate(w for w in background if w not in seen):
            extra[i % len(extra)].append(word)
    bags += extra

    documents = tuple(
        (f"d{n:04d}", " ".join(bags[n][i] for i in rng.permutation(len(bags[n]))))
        for n in range(len(bags))
    )
    queries = tuple((f"q{t:02d}", " ".join(query)) for t, (query, _, _) in enumerate(topics))
    intents = {f"q{t:02d}": intent for t, (_, intent, _) in enumerate(topics)}

    vectors: dict[str, np.ndarray] = {w: _unit(rng.normal(size=spec.dim)) for w in background}
    for query, intent, noise in topics:
        centroid = _unit(rng.normal(size=spec.dim))
        for term in query:
            vectors[term] = _unit(centroid + 0.2 * _unit(rng.normal(size=spec.dim)))
        for term in intent:
            vectors[term] = _unit(centroid + 0.5 * _unit(rng.normal(size=spec.dim)))
        for term in noise:
            vectors[term] = _unit(rng.normal(size=spec.dim))
    embeddings = EmbeddingTable({w: v.tolist() for w, v in vectors.items()})

    logger.info(
        "generated %d documents, %d queries (seed %d)", len(documents), len(queries), spec.seed
    )
    return SyntheticCollection(documents, queries, intents, embeddings, spec)
