from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property


@dataclass(frozen=True)
class RankedDoc:
    doc_id: str
    score: float | None = None


@dataclass(frozen=True)
class Ranking:
    """An ordering of documents for one query.

    ``entries[i]`` is the document at position ``i + 1``. Scores are ``None``
    when the producer does not expose them (strong agnosticism).
    """

    query_id: str
    entries: tuple[RankedDoc, ...]
    origin: str
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        ids = [e.doc_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError(f"ranking {self.query_id!r} from {self.origin!r} repeats a doc_id")
        scores = [e.score for e in self.entries]
        present = [s is not None for s in scores]
        if any(present) and not all(present):
            raise ValueError("ranking scores must be all present or all absent")
        if all(present):
            for prev, cur in zip(scores, scores[1:], strict=False):
                if cur > prev:  # type: ignore[operator]
                    raise ValueError(f"ranking {self.query_id!r} scores increase down the list")

    @classmethod
    def from_scores(
        cls,
        query_id: str,
        scores: Mapping[str, float],
        origin: str,
        *,
        limit: int | None = None,
        keep_scores: bool = True,
        flags: Iterable[str] = (),
    ) -> Ranking:
        """Sort by descending score, ties by ascending doc_id."""
        ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
        if limit is not None:
            ordered = ordered[:limit]
        entries = tuple(
            RankedDoc(doc_id, float(score) if keep_scores else None) for doc_id, score in ordered
        )
        return cls(query_id, entries, origin, tuple(flags))

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def doc_ids(self) -> tuple[str, ...]:
        """The ordering: position -> doc_id."""
        return tuple(e.doc_id for e in self.entries)

    @cached_property
    def positions(self) -> dict[str, int]:
        """The ranking: doc_id -> 1-based position."""
        return {doc_id: i + 1 for i, doc_id in enumerate(self.doc_ids)}

    @property
    def has_scores(self) -> bool:
        return bool(self.entries) and self.entries[0].score is not None

    @property
    def scores(self) -> tuple[float, ...] | None:
        if not self.has_scores:
            return None
        return tuple(e.score for e in self.entries)  # type: ignore[misc]

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def position(self, doc_id: str) -> int:
        try:
            return self.positions[doc_id]
        except KeyError:
            raise KeyError(f"{doc_id!r} is not in ranking {self.query_id!r}") from None

    def top(self, k: int) -> Ranking:
        return Ranking(self.query_id, self.entries[:k], self.origin, self.flags)

    def without_scores(self) -> Ranking:
        entries = tuple(RankedDoc(e.doc_id) for e in self.entries)
        return Ranking(self.query_id, entries, self.origin, self.flags)

