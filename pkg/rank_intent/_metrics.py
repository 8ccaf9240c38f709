"""Fidelity (Kendall's tau), accuracy and recall of an explanation."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, fields

import numpy as np

from rank_intent._errors import DataError
from rank_intent._ranking import Ranking

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalRecord:
    """One query's scores. Metrics that need a ground truth are None without one."""

    query_id: str
    blackbox: str
    mode: str
    sampling: str
    features: int
    accuracy: float | None
    local_fidelity: float | None
    global_fidelity: float | None
    recall_ci: float | None
    recall_cii: float | None
    n_terms: int = 0
    coverage: int = 0
    n_pairs: int = 0

    def as_row(self) -> list[object]:
        return [getattr(self, f.name) for f in fields(self)]

    def as_dict(self) -> dict[str, object]:
        return asdict(self)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


METRIC_COLUMNS = ("accuracy", "local_fidelity", "global_fidelity", "recall_ci", "recall_cii")


def kendall_tau(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Tau-a over all i < j: sum of sgn(x_i - x_j) * sgn(y_i - y_j) over n(n-1)/2.

    Tied pairs contribute 0.

    Raises:
        DataError: lengths differ or fewer than two items.
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"kendall_tau needs two equal-length vectors, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise DataError(f"kendall_tau is undefined for {n} items")
    rows, cols = np.triu_indices(n, 1)
    concordance = np.sign(a[rows] - a[cols]) * np.sign(b[rows] - b[cols])
    return float(concordance.sum() / (n * (n - 1) / 2))


def _blackbox_vector(ranking: Ranking) -> np.ndarray:
    """Scores when exposed, otherwise negated rank positions."""
    if ranking.has_scores:
        return np.asarray(ranking.scores, dtype=np.float64)
    return -np.arange(1, len(ranking) + 1, dtype=np.float64)


def local_fidelity(
    bb_ranking: Ranking, expl_scores: Mapping[str, float], k: int = 10
) -> float:
    """Tau between the black box and the explanation over the top ``k`` documents."""
    if len(bb_ranking) < k:
        logger.warning(
            "query %r: fidelity at %d over %d docs", bb_ranking.query_id, k, len(bb_ranking)
        )
    top = bb_ranking.top(k)
    try:
        y = [expl_scores[d] for d in top.doc_ids]
    except KeyError as exc:
        raise DataError(f"no explanation score for {exc.args[0]!r}") from None
    return kendall_tau(_blackbox_vector(top), y)


def global_fidelity(bb_ranking: Ranking, expl_scores: Mapping[str, float]) -> float:
    """Tau over the whole retrieved pool."""
    return local_fidelity(bb_ranking, expl_scores, k=len(bb_ranking))


def accuracy(terms: Iterable[str], ground_truth: Iterable[str]) -> float:
    """|T ∩ G| / |G|."""
    truth = set(ground_truth)
    if not truth:
        raise DataError("accuracy needs a non-empty ground truth")
    return len(set(terms) & truth) / len(truth)


def recall(candidates: Iterable[str], ground_truth: Iterable[str]) -> float:
    """|C ∩ G| / |G|."""
    truth = set(ground_truth)
    if not truth:
        raise DataError("recall needs a non-empty ground truth")
    return len(set(candidates) & truth) / len(truth)


def mean_metrics(records: Sequence[EvalRecord]) -> dict[str, float | None]:
    """Per-metric mean over the records that have a value; None if none do."""
    means: dict[str, float | None] = {}
    for name in METRIC_COLUMNS:
        values = [getattr(r, name) for r in records if getattr(r, name) is not None]
        means[name] = math.fsum(values) / len(values) if values else None
    return means
