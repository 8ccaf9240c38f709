"""Preference pairs, pair sampling and the candidate x pair preference matrix."""

from __future__ import annotations

import logging
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from rank_intent._errors import DataError
from rank_intent._io import read_table, write_table
from rank_intent._rankers import ExplanationRanker
from rank_intent._ranking import Ranking
from rank_intent._strategies import Sampling, resolve

logger = logging.getLogger(__name__)

# resample-on-collision budget for topk-rank-random, as a multiple of m
ATTEMPTS_PER_PAIR = 50
PAIR_SEPARATOR = ">"
BASELINE_ROW = "<baseline>"


@dataclass(frozen=True)
class PreferencePair:
    """``better`` is ranked above ``worse`` by the black box."""

    better: str
    worse: str
    source: str = "sampled"

    def __post_init__(self) -> None:
        if self.better == self.worse:
            raise DataError(f"self-pair on {self.better!r}")

    @property
    def pair_id(self) -> str:
        return f"{self.better}{PAIR_SEPARATOR}{self.worse}"

    @property
    def key(self) -> tuple[str, str]:
        return (self.better, self.worse)

    def reversed(self) -> PreferencePair:
        return PreferencePair(self.worse, self.better, self.source)


@dataclass(frozen=True)
class PairSample:
    pairs: tuple[PreferencePair, ...]
    strategy: Sampling
    flags: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def n_topk(self) -> int:
        return sum(1 for p in self.pairs if p.source == "topk")


def _pair(ranking: Ranking, i: int, j: int, source: str) -> PreferencePair:
    """Pair of 0-based positions, oriented better-first."""
    if i > j:
        i, j = j, i
    return PreferencePair(ranking.doc_ids[i], ranking.doc_ids[j], source)


def _total_pairs(n: int) -> int:
    return n * (n - 1) // 2


def topk_pairs(ranking: Ranking, k: int = 10) -> PairSample:
    """All k(k-1)/2 pairs among the top ``k`` documents, in rank order."""
    flags: tuple[str, ...] = ()
    if len(ranking) < k:
        logger.warning(
            "query %r: ranking has %d docs, wanted top %d", ranking.query_id, len(ranking), k
        )
        flags = ("short_ranking",)
    n = min(k, len(ranking))
    pairs = tuple(_pair(ranking, i, j, "topk") for i in range(n) for j in range(i + 1, n))
    return PairSample(pairs, Sampling.TOPK, flags)


def _rank_biased_weights(n: int) -> np.ndarray:
    """Weight of every i < j pair (np.triu_indices order): 1/rank_i + 1/rank_j."""
    inv = 1.0 / np.arange(1, n + 1, dtype=np.float64)
    rows, cols = np.triu_indices(n, 1)
    w = inv[rows] + inv[cols]
    return w / w.sum()


def _draw_pair_indices(
    n: int,
    m: int,
    rng: np.random.Generator,
    *,
    exclude_topk: int = 0,
    biased: bool = False,
) -> tuple[list[tuple[int, int]], bool]:
    """``m`` distinct position pairs without replacement; True if the pool ran out."""
    rows, cols = np.triu_indices(n, 1)
    eligible = np.flatnonzero(cols >= exclude_topk) if exclude_topk else np.arange(rows.size)
    exhausted = m >= eligible.size
    if exhausted:
        chosen = eligible
    else:
        p = None
        if biased:
            w = _rank_biased_weights(n)[eligible]
            p = w / w.sum()
        chosen = np.sort(rng.choice(eligible, size=m, replace=False, p=p))
    return [(int(rows[c]), int(cols[c])) for c in chosen], exhausted


def _draw_rank_random(
    n: int, m: int, rng: np.random.Generator, taken: set[tuple[int, int]]
) -> tuple[list[tuple[int, int]], bool]:
    """First document rank-biased (1/rank), second uniform; resample on collision."""
    inv = 1.0 / np.arange(1, n + 1, dtype=np.float64)
    p_first = inv / inv.sum()
    drawn: list[tuple[int, int]] = []
    seen = set(taken)
    attempts = 0
    limit = ATTEMPTS_PER_PAIR * m
    while len(drawn) < m and attempts < limit:
        batch = min(limit - attempts, max(m - len(drawn), 16))
        first = rng.choice(n, size=batch, p=p_first)
        second = rng.integers(0, n - 1, size=batch)
        second = second + (second >= first)
        for a, b in zip(first.tolist(), second.tolist(), strict=True):
            attempts += 1
            key = (a, b) if a < b else (b, a)
            if key in seen:
                continue
            seen.add(key)
            drawn.append(key)
            if len(drawn) == m:
                break
    return drawn, len(drawn) < m


def sample_pairs(
    strategy: Sampling | str | int,
    ranking: Ranking,
    m: int,
    rng: np.random.Generator | int,
    *,
    k: int = 10,
) -> PairSample:
    """Preference pairs from a black-box ranking under one sampling strategy.

    ``topk`` ignores ``m``. The ``topk-*`` strategies add ``m`` sampled pairs
    to the top-k pairs; ``random`` and ``rank-biased`` sample ``m`` pairs from
    the whole ranking and do not include the top-k pairs. All pairs are
    distinct and oriented better-first. ``rng`` may be a seed.
    """
    strategy = resolve(Sampling, strategy)
    if m < 0:
        raise DataError(f"m must be >= 0, got {m}")
    if isinstance(rng, int):
        rng = np.random.default_rng(rng)

    n = len(ranking)
    head = topk_pairs(ranking, k) if strategy.includes_topk else PairSample((), strategy)
    flags = list(head.flags)
    if strategy is Sampling.TOPK or m == 0 or n < 2:
        return PairSample(head.pairs, strategy, tuple(flags))

    if strategy is Sampling.TOPK_RANK_RANDOM:
        kk = min(k, n)
        taken = {(i, j) for i in range(kk) for j in range(i + 1, kk)}
        available = _total_pairs(n) - len(taken)
        if m >= available:
            positions, exhausted = _draw_pair_indices(n, m, rng, exclude_topk=kk)
        else:
            positions, exhausted = _draw_rank_random(n, m, rng, taken)
            if exhausted:
                logger.warning(
                    "query %r: drew %d of %d pairs within %d attempts",
                    ranking.query_id,
                    len(positions),
                    m,
                    ATTEMPTS_PER_PAIR * m,
                )
                flags.append("attempts_exhausted")
                exhausted = False
    else:
        positions, exhausted = _draw_pair_indices(
            n,
            m,
            rng,
            exclude_topk=min(k, n) if strategy.includes_topk else 0,
            biased=strategy is Sampling.RANK_BIASED,
        )
    if exhausted:
        logger.warning(
            "query %r: %d pairs requested, only %d available", ranking.query_id, m, len(positions)
        )
        flags.append("all_pairs")
    sampled = tuple(_pair(ranking, i, j, "sampled") for i, j in positions)
    return PairSample(head.pairs + sampled, strategy, tuple(flags))


def pair_score(term: str, pair: PreferencePair, ranker: ExplanationRanker) -> float:
    """S_E(w, better) - S_E(w, worse)."""
    return ranker.term_score(term, pair.better) - ranker.term_score(term, pair.worse)


class PreferenceMatrix:
    """Dense candidate-term x preference-pair matrix of pair scores.

    ``baseline`` is added to every aggregate before coverage is counted;
    it is zero unless the matrix was built with anchor terms.
    """

    def __init__(
        self,
        query_id: str,
        terms: Sequence[str],
        pairs: Sequence[PreferencePair],
        values: np.ndarray,
        baseline: np.ndarray | None = None,
    ) -> None:
        terms = tuple(terms)
        pairs = tuple(pairs)
        values = np.array(values, dtype=np.float64).reshape(len(terms), len(pairs))
        if len(set(terms)) != len(terms):
            raise DataError(f"matrix for {query_id!r} repeats a term")
        if len({p.key for p in pairs}) != len(pairs):
            raise DataError(f"matrix for {query_id!r} repeats a pair")
        if not np.isfinite(values).all():
            raise DataError(f"matrix for {query_id!r} has non-finite entries")
        if baseline is None:
            baseline = np.zeros(len(pairs))
        baseline = np.array(baseline, dtype=np.float64)
        if baseline.shape != (len(pairs),):
            raise DataError(f"baseline has shape {baseline.shape}, expected ({len(pairs)},)")
        values.setflags(write=False)
        baseline.setflags(write=False)
        self.query_id = query_id
        self.terms = terms
        self.pairs = pairs
        self.values = values
        self.baseline = baseline
        self._rows = {t: i for i, t in enumerate(terms)}

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.terms), len(self.pairs))

    def __repr__(self) -> str:
        return f"<PreferenceMatrix {self.query_id!r} {self.shape[0]}x{self.shape[1]}>"

    def __contains__(self, term: object) -> bool:
        return term in self._rows

    def row_index(self, term: str) -> int:
        try:
            return self._rows[term]
        except KeyError:
            raise KeyError(f"{term!r} is not a row of {self!r}") from None

    def row(self, term: str) -> np.ndarray:
        return self.values[self.row_index(term)]

    def restrict(self, terms: Iterable[str]) -> PreferenceMatrix:
        keep = [t for t in terms if t in self._rows]
        rows = [self._rows[t] for t in keep]
        return PreferenceMatrix(
            self.query_id, keep, self.pairs, self.values[rows], self.baseline
        )

    def save(self, path: str | os.PathLike[str]) -> None:
        """TSV: header ``term`` + pair ids, one row per term, baseline row last if non-zero."""
        rows: list[list[object]] = [
            [t, *self.values[i].tolist()] for i, t in enumerate(self.terms)
        ]
        if self.baseline.any():
            rows.append([BASELINE_ROW, *self.baseline.tolist()])
        write_table(path, ["term", *(p.pair_id for p in self.pairs)], rows)

    @classmethod
    def load(cls, path: str | os.PathLike[str], query_id: str | None = None) -> PreferenceMatrix:
        header, rows = read_table(path)
        if not header or header[0] != "term":
            raise DataError(f"{path}: first column must be 'term'")
        pairs = []
        for pid in header[1:]:
            parts = pid.split(PAIR_SEPARATOR)
            if len(parts) != 2:
                raise DataError(f"{path}: bad pair id {pid!r}")
            pairs.append(PreferencePair(parts[0], parts[1]))
        terms: list[str] = []
        values: list[list[float]] = []
        baseline = None
        for lineno, row in enumerate(rows, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: {len(row)} cells, expected {len(header)}")
            try:
                cells = [float(v) for v in row[1:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric cell") from None
            if row[0] == BASELINE_ROW:
                baseline = np.array(cells)
            else:
                terms.append(row[0])
                values.append(cells)
        qid = query_id if query_id is not None else os.path.splitext(os.path.basename(path))[0]
        return cls(qid, terms, pairs, np.array(values).reshape(len(terms), len(pairs)), baseline)


def build_matrix(
    candidates: Iterable[str],
    pairs: Iterable[PreferencePair],
    ranker: ExplanationRanker,
    *,
    query_id: str = "",
    anchor: Iterable[str] = (),
) -> PreferenceMatrix:
    """Pair-score every (candidate, pair) cell.

    ``anchor`` terms are summed into the baseline and left out of the rows.

    Raises:
        DataError: no candidate rows or no pairs.
    """
    anchor_terms = sorted(set(anchor))
    excluded = set(anchor_terms)
    terms = [t for t in dict.fromkeys(candidates) if t not in excluded]
    pairs = tuple(pairs)
    if not terms:
        raise DataError(f"query {query_id!r}: no candidate terms for the preference matrix")
    if not pairs:
        raise DataError(f"query {query_id!r}: no preference pairs")

    doc_ids = sorted({d for p in pairs for d in p.key})
    col = {d: i for i, d in enumerate(doc_ids)}
    better = np.fromiter((col[p.better] for p in pairs), dtype=np.intp, count=len(pairs))
    worse = np.fromiter((col[p.worse] for p in pairs), dtype=np.intp, count=len(pairs))

    scores = ranker.score_matrix(terms, doc_ids)
    values = scores[:, better] - scores[:, worse]
    baseline = None
    if anchor_terms:
        anchor_scores = ranker.score_matrix(anchor_terms, doc_ids)
        baseline = np.zeros(len(pairs))
        for row in anchor_scores:
            baseline = baseline + (row[better] - row[worse])
    matrix = PreferenceMatrix(query_id, terms, pairs, values, baseline)
    logger.info(
        "query %r: built %r (anchor %s)", query_id, matrix, ",".join(anchor_terms) or "-"
    )
    return matrix

