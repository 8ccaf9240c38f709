"""Word vectors in the GloVe text layout and the vector operations over them."""

from __future__ import annotations

import logging
import math
import os
import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from rank_intent._errors import DataError
from rank_intent._io import atomic_write_text

logger = logging.getLogger(__name__)


class EmbeddingTable:
    """Immutable word -> vector map; every vector has ``dim`` finite entries."""

    def __init__(self, vectors: Mapping[str, Sequence[float]]) -> None:
        if not vectors:
            raise DataError("embedding table is empty")
        words = tuple(sorted(vectors))
        matrix = np.asarray([vectors[w] for w in words], dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] < 1:
            raise DataError("embedding vectors must share one dimensionality >= 1")
        if not np.isfinite(matrix).all():
            raise DataError("embedding vectors contain NaN or infinite entries")
        matrix.setflags(write=False)
        self.words = words
        self.matrix = matrix
        self._rows = {w: i for i, w in enumerate(words)}
        norms = np.linalg.norm(matrix, axis=1)
        norms.setflags(write=False)
        self._norms = norms

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self._rows

    def __repr__(self) -> str:
        return f"<EmbeddingTable words={len(self)} dim={self.dim}>"

    def get(self, word: str) -> np.ndarray | None:
        row = self._rows.get(word)
        return None if row is None else self.matrix[row]

    def __getitem__(self, word: str) -> np.ndarray:
        vec = self.get(word)
        if vec is None:
            raise KeyError(word)
        return vec


def load_embeddings(path: str | os.PathLike[str]) -> EmbeddingTable:
    """Parse ``word v1 ... vdim`` lines.

    Raises:
        DataError: empty file, a malformed line, or a line whose
            dimensionality differs from the first one (reported with its line number).
    """
    vectors: dict[str, list[float]] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip().split(" ")
            if parts == [""]:
                continue
            word, values = parts[0], parts[1:]
            if not values:
                raise DataError(f"{path}:{lineno}: no vector for {word!r}")
            try:
                vec = [float(v) for v in values]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector entry") from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise DataError(f"{path}:{lineno}: expected {dim} dimensions, got {len(vec)}")
            if not all(math.isfinite(v) for v in vec):
                raise DataError(f"{path}:{lineno}: NaN or infinite entry")
            vectors[word] = vec
    if not vectors:
        raise DataError(f"{path}: no embeddings found")
    table = EmbeddingTable(vectors)
    logger.info("loaded %r from %s", table, path)
    return table


def save_embeddings(path: str | os.PathLike[str], table: EmbeddingTable) -> None:
    lines = (
        word + " " + " ".join(repr(float(x)) for x in table.matrix[i])
        for i, word in enumerate(table.words)
    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def cosine(u: np.ndarray | Sequence[float], v: np.ndarray | Sequence[float]) -> float:
    """Cosine similarity; 0.0 (with a RuntimeWarning) when either vector is zero."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine of a zero vector is taken as 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def mean_vector(
    table: EmbeddingTable,
    terms: Iterable[str],
    weights: Mapping[str, float] | Sequence[float] | None = None,
) -> np.ndarray:
    """Weighted mean of the vectors of the embedded ``terms``; missing terms are skipped.

    Args:
        weights: per-term weights, either a mapping or a sequence aligned with
            ``terms``. ``None`` gives the plain average.

    Raises:
        DataError: none of the terms has an embedding.
    """
    terms = list(terms)
    if weights is None:
        w = [1.0] * len(terms)
    elif isinstance(weights, Mapping):
        w = [float(weights.get(t, 0.0)) for t in terms]
    else:
        w = [float(x) for x in weights]
        if len(w) != len(terms):
            raise ValueError(f"{len(w)} weights for {len(terms)} terms")

    total = np.zeros(table.dim)
    weight_sum = 0.0
    for term, weight in zip(terms, w, strict=True):
        vec = table.get(term)
        if vec is None:
            continue
        total += weight * vec
        weight_sum += weight
    if weight_sum == 0.0:
        raise DataError(f"no embedded term among {terms[:5]!r}")
    return total / weight_sum


@dataclass(frozen=True)
class NearestTerms:
    terms: tuple[str, ...]
    similarities: tuple[float, ...]
    flags: tuple[str, ...] = ()


def nearest_terms(
    table: EmbeddingTable, v: np.ndarray | Sequence[float], allowed: Iterable[str], n: int
) -> NearestTerms:
    """The ``n`` allowed words closest to ``v`` by cosine, ties by word.

    Exhaustive scan over ``allowed`` intersected with the table.

    Raises:
        DataError: no allowed word has an embedding.
    """
    eligible = sorted({w for w in allowed if w in table})
    if not eligible:
        raise DataError("no allowed term has an embedding")
    query = np.asarray(v, dtype=np.float64)
    rows = np.fromiter((table._rows[w] for w in eligible), dtype=np.intp, count=len(eligible))
    qnorm = float(np.linalg.norm(query))
    norms = table._norms[rows] * qnorm
    dots = table.matrix[rows] @ query
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(norms > 0.0, dots / norms, 0.0)
    sims = np.clip(sims, -1.0, 1.0)
    # eligible is already sorted, so a stable sort on -sim breaks ties lexicographically
    order = np.argsort(-sims, kind="stable")[:n]
    flags: tuple[str, ...] = ()
    if len(eligible) < n:
        logger.warning("only %d eligible terms for %d nearest", len(eligible), n)
        flags = ("undersized",)
    return NearestTerms(
        tuple(eligible[i] for i in order), tuple(float(sims[i]) for i in order), flags
    )
