"""Maximum preference coverage: greedy selection and an exhaustive oracle.

A column (preference pair) is covered when the baseline plus the selected
rows sums to a strictly positive value. Aggregates are accumulated one row
at a time in selection order, so a coverage reported by a solver is exactly
what ``pcov`` recomputes for the same selection.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from rank_intent._errors import ConfigError
from rank_intent._preference import PreferenceMatrix
from rank_intent._strategies import PsumMode, resolve

logger = logging.getLogger(__name__)

# exhaustive enumeration refuses larger candidate sets
EXACT_MAX_CANDIDATES = 22
_EXACT_BATCH = 8192


@dataclass(frozen=True)
class Selection:
    """Chosen terms in pick order plus the boolean selection vector over matrix rows."""

    terms: tuple[str, ...]
    selected: tuple[bool, ...]
    coverage: int
    utilities: tuple[int, ...] = field(default=())
    method: str = "greedy"

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.terms


SelectionLike = Selection | Iterable[str]


def _row_order(matrix: PreferenceMatrix, selection: SelectionLike) -> list[int]:
    if isinstance(selection, Selection):
        terms: Sequence[str] = selection.terms
    elif isinstance(selection, (set, frozenset)):
        terms = sorted(selection)
    else:
        terms = list(selection)
    rows = [matrix.row_index(t) for t in terms]
    if len(set(rows)) != len(rows):
        raise ValueError("selection repeats a term")
    return rows


def _aggregate(matrix: PreferenceMatrix, rows: Iterable[int]) -> np.ndarray:
    y = matrix.baseline.copy()
    for r in rows:
        y = y + matrix.values[r]
    return y


def _covered(y: np.ndarray) -> int:
    return int(np.count_nonzero(y > 0.0))


def _selection(
    matrix: PreferenceMatrix, rows: Sequence[int], utilities: Sequence[int], method: str
) -> Selection:
    mask = [False] * len(matrix.terms)
    for r in rows:
        mask[r] = True
    return Selection(
        tuple(matrix.terms[r] for r in rows),
        tuple(mask),
        _covered(_aggregate(matrix, rows)),
        tuple(utilities),
        method,
    )


def pcov(matrix: PreferenceMatrix, selection: SelectionLike) -> int:
    """Number of pairs whose aggregate over the selection is > 0.

    Sets are accumulated in sorted term order, other iterables in the order given.
    """
    return _covered(_aggregate(matrix, _row_order(matrix, selection)))


def utility(matrix: PreferenceMatrix, current: SelectionLike, term: str) -> int:
    """pcov(current + [term]) - pcov(current); negative when ``term`` uncovers pairs."""
    rows = _row_order(matrix, current)
    r = matrix.row_index(term)
    if r in rows:
        raise ValueError(f"{term!r} is already selected")
    before = _aggregate(matrix, rows)
    return _covered(before + matrix.values[r]) - _covered(before)


def psum(
    matrix: PreferenceMatrix,
    term: str,
    *,
    mode: PsumMode | str | int = PsumMode.POSITIVE,
    current: SelectionLike = (),
) -> float:
    """Tie-break column sum of a row.

    ``positive`` sums every positive entry. ``covered`` sums the entries of
    the columns the term would newly cover given ``current``.
    """
    mode = resolve(PsumMode, mode)
    x = matrix.row(term)
    if mode is PsumMode.POSITIVE:
        return float(x[x > 0.0].sum())
    y = _aggregate(matrix, _row_order(matrix, current))
    newly = (y <= 0.0) & (y + x > 0.0)
    return float(x[newly].sum())


def greedy_select(
    matrix: PreferenceMatrix,
    budget: int = 10,
    *,
    psum_mode: PsumMode | str | int = PsumMode.POSITIVE,
) -> Selection:
    """Add the term of highest utility until ``budget`` terms or no utility > 0.

    Ties go to the higher psum, then to the lexicographically smaller term.
    """
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")
    psum_mode = resolve(PsumMode, psum_mode)
    n_rows, n_cols = matrix.shape
    if n_rows == 0 or n_cols == 0:
        return _selection(matrix, [], [], "greedy")

    x = matrix.values
    positive_sums = np.where(x > 0.0, x, 0.0).sum(axis=1)
    y = matrix.baseline.copy()
    covered = _covered(y)
    remaining = np.ones(n_rows, dtype=bool)
    picks: list[int] = []
    gains_taken: list[int] = []

    while len(picks) < budget and remaining.any():
        trial = y + x
        gains = np.count_nonzero(trial > 0.0, axis=1) - covered
        if psum_mode is PsumMode.POSITIVE:
            ties = positive_sums
        else:
            newly = (y <= 0.0) & (trial > 0.0)
            ties = np.where(newly, x, 0.0).sum(axis=1)
        eligible = np.flatnonzero(remaining & (gains > 0))
        if eligible.size == 0:
            break
        best = min(
            eligible.tolist(), key=lambda r: (-int(gains[r]), -float(ties[r]), matrix.terms[r])
        )
        y = y + x[best]
        covered = _covered(y)
        remaining[best] = False
        picks.append(best)
        gains_taken.append(int(gains[best]))
        logger.debug(
            "query %r: pick %r utility=%d coverage=%d",
            matrix.query_id,
            matrix.terms[best],
            int(gains[best]),
            covered,
        )

    selection = _selection(matrix, picks, gains_taken, "greedy")
    logger.info(
        "query %r: greedy chose %d terms, coverage %d/%d",
        matrix.query_id,
        len(selection),
        selection.coverage,
        n_cols,
    )
    return selection


def exact_select(matrix: PreferenceMatrix, budget: int) -> Selection:
    """Coverage-maximal selection of at most ``budget`` terms by subset enumeration.

    Among the maxima the lexicographically least sorted term tuple wins.
    Terms are returned in sorted order.

    Raises:
        ConfigError: more than 22 candidate rows.
    """
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")
    n_rows = len(matrix.terms)
    if n_rows > EXACT_MAX_CANDIDATES:
        raise ConfigError(
            f"exact_select enumerates subsets and allows at most {EXACT_MAX_CANDIDATES} "
            f"candidates, got {n_rows}; use greedy_select instead"
        )
    order = sorted(range(n_rows), key=lambda r: matrix.terms[r])
    sorted_values = matrix.values[order]

    best_cov = _covered(matrix.baseline)
    best: tuple[int, ...] = ()
    for size in range(1, min(budget, n_rows) + 1):
        combos = itertools.combinations(range(n_rows), size)
        while True:
            chunk = np.array(list(itertools.islice(combos, _EXACT_BATCH)), dtype=np.intp)
            if chunk.size == 0:
                break
            acc = np.broadcast_to(matrix.baseline, (len(chunk), matrix.shape[1])).copy()
            for col in range(size):
                acc = acc + sorted_values[chunk[:, col]]
            cov = np.count_nonzero(acc > 0.0, axis=1)
            # combinations come in lexicographic order, so argmax is the least tuple
            i = int(np.argmax(cov))
            candidate = tuple(int(c) for c in chunk[i])
            key = _term_key(matrix, order, candidate)
            if cov[i] > best_cov or (cov[i] == best_cov and key < _term_key(matrix, order, best)):
                best_cov = int(cov[i])
                best = candidate

    rows = [order[c] for c in best]
    selection = _selection(matrix, rows, [], "exact")
    logger.info(
        "query %r: exact optimum %d/%d with %d terms",
        matrix.query_id,
        selection.coverage,
        matrix.shape[1],
        len(selection),
    )
    return selection


def _term_key(
    matrix: PreferenceMatrix, order: Sequence[int], combo: tuple[int, ...]
) -> tuple[str, ...]:
    return tuple(matrix.terms[order[c]] for c in combo)
