"""End-to-end pipeline: retrieve, rank, select candidates, build P, solve, evaluate.

Randomness comes from ``config.seed`` through named sub-streams (pair
sampling, reductive document sample) keyed by query id, so any stage can
be rerun for one query in isolation and the worker count never changes a
result.
"""

from __future__ import annotations

import json
import logging
import os
import zlib
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from rank_intent._blackbox import BlackBoxContract, GlassBox, bb_rank, make_blackbox
from rank_intent._candidates import (
    CandidateSet,
    additive_filter,
    parallel_map,
    reductive_filter,
    tfidf_candidates,
)
from rank_intent._config import ExperimentConfig
from rank_intent._embeddings import EmbeddingTable, load_embeddings
from rank_intent._errors import (
    DataError,
    DiscordantPairError,
    QuerySkipped,
    RankIntentError,
)
from rank_intent._index import Index, Query, build_index
from rank_intent._io import (
    atomic_write_text,
    dump_json,
    read_corpus,
    read_intents,
    read_queries,
    write_intents,
    write_table,
)
from rank_intent._metrics import (
    EvalRecord,
    accuracy,
    global_fidelity,
    local_fidelity,
    mean_metrics,
    recall,
)
from rank_intent._preference import PreferenceMatrix, build_matrix, sample_pairs
from rank_intent._rankers import ExplanationRanker, expansion_terms
from rank_intent._ranking import Ranking
from rank_intent._solver import EXACT_MAX_CANDIDATES, exact_select, greedy_select
from rank_intent._strategies import Agnosticism, Sampling

logger = logging.getLogger(__name__)

EXPLANATION_FORMAT = 1


def substream(seed: int, name: str, query_id: str) -> np.random.Generator:
    """Independent generator for one named stage of one query."""
    return np.random.default_rng(
        [seed, zlib.crc32(name.encode("utf-8")), zlib.crc32(query_id.encode("utf-8"))]
    )


@dataclass
class Workspace:
    """Everything loaded once per experiment and shared by all queries."""

    config: ExperimentConfig
    index: Index
    queries: tuple[Query, ...]
    blackbox: GlassBox
    ranker: ExplanationRanker
    embeddings: EmbeddingTable | None = None

    @property
    def contract(self) -> BlackBoxContract:
        """The black box as the configured agnosticism exposes it."""
        if self.config.mode is Agnosticism.STRONG:
            return self.blackbox.strong()
        return self.blackbox

    def query(self, query_id: str) -> Query:
        for q in self.queries:
            if q.query_id == query_id:
                return q
        raise DataError(f"unknown query id {query_id!r}")


def load_index(config: ExperimentConfig) -> Index:
    if config.index_path and os.path.exists(config.index_path):
        index = Index.load(config.index_path)
        logger.info("loaded %r from %s", index, config.index_path)
        return index
    if not config.corpus_path:
        raise DataError("config needs corpus_path or an existing index_path")
    return build_index(read_corpus(config.corpus_path), stem=config.stem)


def parse_queries(
    pairs: Iterable[tuple[str, str]], *, stem: bool = False
) -> tuple[Query, ...]:
    """Tokenize ``(query_id, text)`` pairs, dropping (with a warning) those left empty."""
    queries = []
    for query_id, text in pairs:
        try:
            queries.append(Query.parse(query_id, text, stem=stem))
        except DataError as exc:
            logger.warning("%s", exc)
    return tuple(queries)


def load_workspace(
    config: ExperimentConfig,
    *,
    index: Index | None = None,
    queries: Sequence[Query] | None = None,
) -> Workspace:
    """Load (or accept) the index and queries and build the configured black box."""
    index = index if index is not None else load_index(config)
    if queries is None:
        if not config.queries_path:
            raise DataError("config needs queries_path")
        queries = parse_queries(read_queries(config.queries_path), stem=config.stem)
    embeddings = load_embeddings(config.embeddings_path) if config.embeddings_path else None
    intents = read_intents(config.intents_path) if config.intents_path else None
    blackbox = make_blackbox(
        config.blackbox,
        index,
        embeddings=embeddings,
        intents=intents,
        alpha=config.alpha,
        gamma=config.gamma,
        delta=config.delta,
        mu=config.mu,
        pool_size=config.pool_size,
    )
    return Workspace(
        config,
        index,
        tuple(queries),
        blackbox,
        ExplanationRanker(index, config.delta),
        embeddings,
    )


@dataclass(frozen=True)
class Explanation:
    """T_q for one query plus what it was built from and how well it does."""

    query_id: str
    query_terms: tuple[str, ...]
    blackbox: str
    mode: str
    sampling: str
    features: int
    terms: tuple[str, ...]
    coverage: int
    baseline_coverage: int
    utilities: tuple[int, ...]
    pair_ids: tuple[str, ...]
    rows: dict[str, tuple[float, ...]]
    candidate_counts: dict[str, int]
    pool: tuple[str, ...]
    ground_truth: tuple[str, ...] | None
    record: EvalRecord
    fingerprint: str
    flags: tuple[str, ...] = field(default=())

    @property
    def query(self) -> Query:
        return Query(self.query_id, self.query_terms)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": EXPLANATION_FORMAT,
            "query_id": self.query_id,
            "query_terms": list(self.query_terms),
            "blackbox": self.blackbox,
            "mode": self.mode,
            "sampling": self.sampling,
            "features": self.features,
            "terms": list(self.terms),
            "coverage": self.coverage,
            "baseline_coverage": self.baseline_coverage,
            "utilities": list(self.utilities),
            "pair_ids": list(self.pair_ids),
            "rows": {t: list(v) for t, v in self.rows.items()},
            "candidate_counts": dict(self.candidate_counts),
            "pool": list(self.pool),
            "ground_truth": None if self.ground_truth is None else list(self.ground_truth),
            "record": self.record.as_dict(),
            "fingerprint": self.fingerprint,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Explanation:
        if data.get("format") != EXPLANATION_FORMAT:
            raise DataError(f"unsupported explanation format {data.get('format')!r}")
        truth = data["ground_truth"]
        return cls(
            query_id=data["query_id"],
            query_terms=tuple(data["query_terms"]),
            blackbox=data["blackbox"],
            mode=data["mode"],
            sampling=data["sampling"],
            features=int(data["features"]),
            terms=tuple(data["terms"]),
            coverage=int(data["coverage"]),
            baseline_coverage=int(data["baseline_coverage"]),
            utilities=tuple(data["utilities"]),
            pair_ids=tuple(data["pair_ids"]),
            rows={t: tuple(v) for t, v in data["rows"].items()},
            candidate_counts=dict(data["candidate_counts"]),
            pool=tuple(data["pool"]),
            ground_truth=None if truth is None else tuple(truth),
            record=EvalRecord(**data["record"]),
            fingerprint=data["fingerprint"],
            flags=tuple(data["flags"]),
        )

    def save(self, path: str | os.PathLike[str]) -> None:
        atomic_write_text(path, dump_json(self.to_dict()))

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> Explanation:
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: not an explanation file ({exc})") from None


def _label(member: Sampling | Agnosticism) -> str:
    return member.name.lower().replace("_", "-")


def write_candidates(path: str | os.PathLike[str], stages: Sequence[CandidateSet]) -> None:
    """One row per (stage, term): stage, provenance, rank, term, selection score, tfidf."""
    rows = []
    for stage in stages:
        for rank, term in enumerate(stage.terms, start=1):
            score = stage.scores.get(term)
            rows.append(
                [
                    stage.stage,
                    stage.provenance,
                    rank,
                    term,
                    "" if score is None else score,
                    stage.tfidf.get(term, ""),
                ]
            )
    write_table(path, ["stage", "provenance", "rank", "term", "score", "tfidf"], rows)


def select_candidates(
    workspace: Workspace,
    query: Query,
    bb_ranking: Ranking | None = None,
    *,
    workers: int = 1,
) -> list[CandidateSet]:
    """Stage I candidates, then the reductive and additive stages when perturbation is on."""
    config = workspace.config
    initial = workspace.blackbox.initial_ranking(query)
    if initial.is_empty:
        raise QuerySkipped(query.query_id, "no document matches a query term")
    if bb_ranking is None:
        try:
            bb_ranking = bb_rank(workspace.contract, query, initial.doc_ids)
        except DataError as exc:
            raise QuerySkipped(query.query_id, str(exc)) from None
    stages = [tfidf_candidates(workspace.index, initial.doc_ids, config.caps[0])]
    if not config.uses_perturbation:
        return stages
    reduced = reductive_filter(
        stages[0],
        workspace.contract,
        query,
        bb_ranking,
        keep=config.caps[1],
        k=config.reductive_top,
        extra_sample=config.reductive_extra,
        rng=substream(config.seed, "doc-sample", query.query_id),
        workers=workers,
    )
    stages.append(reduced)
    stages.append(
        additive_filter(
            reduced,
            workspace.contract,
            query,
            bb_ranking.doc_ids[: config.k],
            n_add=config.n_add,
            keep=config.caps[2],
            workers=workers,
        )
    )
    return stages


def explain_query(
    config: ExperimentConfig,
    query: Query,
    workspace: Workspace | None = None,
    *,
    sampling: Sampling | None = None,
    features: int | None = None,
    artifacts_dir: str | os.PathLike[str] | None = None,
    workers: int | None = None,
) -> Explanation:
    """Explain the black box's ranking for one query.

    ``sampling`` and ``features`` override the config for sweeps. With
    ``artifacts_dir`` the candidate stages and the preference matrix are
    written there as TSV.

    Raises:
        QuerySkipped: nothing retrieved, the black box cannot rank the query
            (e.g. no embedded query term), or too few documents for a pair.
    """
    workspace = workspace if workspace is not None else load_workspace(config)
    sampling = sampling if sampling is not None else config.sampling
    m = features if features is not None else config.effective_features
    workers = workers if workers is not None else config.workers
    contract = workspace.contract
    qid = query.query_id

    initial = workspace.blackbox.initial_ranking(query)
    if initial.is_empty:
        raise QuerySkipped(qid, "no document matches a query term")
    try:
        bb_ranking = bb_rank(contract, query, initial.doc_ids)
        truth = workspace.blackbox.intent(query)
    except DataError as exc:
        raise QuerySkipped(qid, str(exc)) from None
    if len(bb_ranking) < 2:
        raise QuerySkipped(qid, "fewer than two documents retrieved")

    stages = select_candidates(workspace, query, bb_ranking, workers=workers)
    final = stages[-1]
    pairs = sample_pairs(
        sampling, bb_ranking, m, substream(config.seed, "sampling", qid), k=config.k
    )
    anchor = query.term_set if config.query_anchor else ()
    try:
        matrix = build_matrix(final.terms, pairs, workspace.ranker, query_id=qid, anchor=anchor)
    except DataError as exc:
        raise QuerySkipped(qid, str(exc)) from None

    if config.exact and len(matrix.terms) <= EXACT_MAX_CANDIDATES:
        selection = exact_select(matrix, config.budget)
    else:
        selection = greedy_select(matrix, config.budget, psum_mode=config.psum_mode)

    expl_scores = {
        d: workspace.ranker.score_expanded(query, selection.terms, d) for d in bb_ranking.doc_ids
    }
    record = EvalRecord(
        query_id=qid,
        blackbox=workspace.blackbox.name,
        mode=_label(config.mode),
        sampling=_label(sampling),
        features=0 if sampling is Sampling.TOPK else m,
        accuracy=accuracy(selection.terms, truth.terms),
        local_fidelity=local_fidelity(bb_ranking, expl_scores, config.k),
        global_fidelity=global_fidelity(bb_ranking, expl_scores),
        recall_ci=recall(stages[0].terms, truth.terms),
        recall_cii=recall(final.terms, truth.terms) if len(stages) > 1 else None,
        n_terms=len(selection),
        coverage=selection.coverage,
        n_pairs=len(pairs),
    )
    flags = [*initial.flags, *bb_ranking.flags, *truth.flags]
    flags += [f"{s.provenance}:{f}" for s in stages for f in s.flags]
    flags += pairs.flags
    if len(bb_ranking) < config.k:
        flags.append("short_ranking")
    flags = list(dict.fromkeys(flags))
    explanation = Explanation(
        query_id=qid,
        query_terms=query.terms,
        blackbox=workspace.blackbox.name,
        mode=record.mode,
        sampling=record.sampling,
        features=record.features,
        terms=selection.terms,
        coverage=selection.coverage,
        baseline_coverage=int(np.count_nonzero(matrix.baseline > 0.0)),
        utilities=selection.utilities,
        pair_ids=tuple(p.pair_id for p in matrix.pairs),
        rows={t: tuple(float(v) for v in matrix.row(t)) for t in selection.terms},
        candidate_counts={f"{s.stage}:{s.provenance}": len(s) for s in stages},
        pool=bb_ranking.doc_ids,
        ground_truth=truth.terms,
        record=record,
        fingerprint=config.fingerprint(),
        flags=tuple(flags),
    )
    if artifacts_dir is not None:
        _write_artifacts(Path(artifacts_dir), qid, stages, matrix)
    if flags:
        logger.warning("query %r flagged: %s", qid, ", ".join(flags))
    logger.info(
        "query %r [%s/%s]: T=%s accuracy=%.3f tau@%d=%.3f",
        qid,
        record.blackbox,
        record.sampling,
        ",".join(selection.terms) or "-",
        record.accuracy,
        config.k,
        record.local_fidelity,
    )
    return explanation


def _write_artifacts(
    directory: Path, query_id: str, stages: Sequence[CandidateSet], matrix: PreferenceMatrix
) -> None:
    write_candidates(directory / f"{query_id}.candidates.tsv", stages)
    matrix.save(directory / f"{query_id}.matrix.tsv")


@dataclass(frozen=True)
class TermContribution:
    term: str
    score_a: float
    score_b: float

    @property
    def difference(self) -> float:
        return self.score_a - self.score_b


@dataclass(frozen=True)
class PairExplanation:
    """Per-term breakdown of why ``doc_a`` and ``doc_b`` are ordered as they are."""

    query_id: str
    doc_a: str
    doc_b: str
    contributions: tuple[TermContribution, ...]
    total_a: float
    total_b: float

    @property
    def difference(self) -> float:
        return self.total_a - self.total_b

    def rows(self) -> list[list[object]]:
        return [[c.term, c.score_a, c.score_b, c.difference] for c in self.contributions]


def explain_pair(
    explanation: Explanation, doc_a: str, doc_b: str, ranker: ExplanationRanker
) -> PairExplanation:
    """Per-term S_E contributions of q ∪ T_q to both documents.

    Raises:
        DataError: a document is not in the explained pool.
        DiscordantPairError: the black box and the explanation order the pair
            differently; the explanation does not account for such a pair.
    """
    bb_pos = {d: i + 1 for i, d in enumerate(explanation.pool)}
    for doc in (doc_a, doc_b):
        if doc not in bb_pos:
            raise DataError(f"{doc!r} is not in the explained pool of {explanation.query_id!r}")
    query = explanation.query
    expl_ranking = ranker.rank_expanded(query, explanation.terms, explanation.pool)
    ea, eb = expl_ranking.position(doc_a), expl_ranking.position(doc_b)
    ba, bb = bb_pos[doc_a], bb_pos[doc_b]
    if doc_a != doc_b and (ba < bb) != (ea < eb):
        raise DiscordantPairError(doc_a, doc_b, (ba, bb), (ea, eb))

    contributions = tuple(
        TermContribution(t, ranker.term_score(t, doc_a), ranker.term_score(t, doc_b))
        for t in expansion_terms(query, explanation.terms)
    )
    return PairExplanation(
        explanation.query_id,
        doc_a,
        doc_b,
        contributions,
        ranker.score_expanded(query, explanation.terms, doc_a),
        ranker.score_expanded(query, explanation.terms, doc_b),
    )


@dataclass(frozen=True)
class ContributionTable:
    """S_E(w, d) for every w in q ∪ T_q (rows) and every listed document (columns)."""

    terms: tuple[str, ...]
    doc_ids: tuple[str, ...]
    values: np.ndarray

    def totals(self) -> np.ndarray:
        return self.values.sum(axis=0)

    def save(self, path: str | os.PathLike[str]) -> None:
        write_table(
            path,
            ["term", *self.doc_ids],
            [[t, *self.values[i].tolist()] for i, t in enumerate(self.terms)],
        )


def term_contributions(
    explanation: Explanation, doc_ids: Sequence[str], ranker: ExplanationRanker
) -> ContributionTable:
    terms = expansion_terms(explanation.query, explanation.terms)
    return ContributionTable(terms, tuple(doc_ids), ranker.score_matrix(terms, doc_ids))


@dataclass(frozen=True)
class SummaryRow:
    sampling: str
    features: int
    n_queries: int
    n_failed: int
    means: dict[str, float | None]

    def as_row(self) -> list[object]:
        return [
            self.sampling,
            self.features,
            self.n_queries,
            self.n_failed,
            *("" if v is None else v for v in self.means.values()),
        ]


SUMMARY_COLUMNS = [
    "sampling",
    "features",
    "n_queries",
    "n_failed",
    "accuracy",
    "local_fidelity",
    "global_fidelity",
    "recall_ci",
    "recall_cii",
]


@dataclass(frozen=True)
class ExperimentReport:
    records: tuple[EvalRecord, ...]
    summary: tuple[SummaryRow, ...]
    failures: dict[str, dict[str, str]]
    sweep: tuple[SummaryRow, ...] = ()
    outputs: tuple[str, ...] = ()

    @property
    def n_failed(self) -> int:
        return sum(len(f) for f in self.failures.values())


def _run_batch(
    workspace: Workspace,
    sampling: Sampling,
    features: int,
    *,
    explanations_dir: Path | None,
) -> tuple[list[Explanation], dict[str, str]]:
    config = workspace.config
    artifacts = explanations_dir if config.keep_intermediates else None

    def run(query: Query) -> Explanation | str:
        try:
            explanation = explain_query(
                config,
                query,
                workspace,
                sampling=sampling,
                features=features,
                artifacts_dir=artifacts,
                workers=1,
            )
        except RankIntentError as exc:
            logger.warning("query %r failed: %s", query.query_id, exc)
            return exc.reason if isinstance(exc, QuerySkipped) else str(exc)
        if explanations_dir is not None:
            explanation.save(explanations_dir / f"{query.query_id}.json")
        return explanation

    results = parallel_map(run, workspace.queries, config.workers)
    done = [r for r in results if isinstance(r, Explanation)]
    failures = {
        q.query_id: r for q, r in zip(workspace.queries, results, strict=True) if isinstance(r, str)
    }
    return done, failures


def _summarise(
    sampling: Sampling, features: int, records: Sequence[EvalRecord], n_failed: int
) -> SummaryRow:
    return SummaryRow(
        _label(sampling),
        0 if sampling is Sampling.TOPK else features,
        len(records),
        n_failed,
        mean_metrics(records),
    )


def run_experiment(
    config: ExperimentConfig, workspace: Workspace | None = None
) -> ExperimentReport:
    """Explain every query under every configured sampling and write the reports.

    Outputs under ``config.output_dir``: one explanation JSON per query,
    ``eval-<blackbox>-<mode>.tsv`` with the per-query records,
    ``summary-<blackbox>-<mode>.tsv`` with the means per sampling, and
    ``sweep-<blackbox>-<mode>.csv`` when ``feature_sweep`` is set. Failed
    queries are logged and left out of the means. The black box's ground-truth
    intents go to ``intents-<blackbox>.tsv``.
    """
    workspace = workspace if workspace is not None else load_workspace(config)
    if workspace.config is not config:
        workspace = Workspace(
            config,
            workspace.index,
            workspace.queries,
            workspace.blackbox,
            workspace.ranker,
            workspace.embeddings,
        )
    out = Path(config.output_dir)
    tag = f"{workspace.blackbox.name}-{_label(config.mode)}"
    if not workspace.queries:
        logger.warning("no queries to explain")
    m = config.effective_features

    records: list[EvalRecord] = []
    summary: list[SummaryRow] = []
    failures: dict[str, dict[str, str]] = {}
    intents: dict[str, tuple[str, ...]] = {}
    for sampling in config.sampling_plan:
        directory = out / "explanations" / tag / _label(sampling)
        done, failed = _run_batch(workspace, sampling, m, explanations_dir=directory)
        batch = [e.record for e in done]
        intents.update((e.query_id, e.ground_truth) for e in done if e.ground_truth is not None)
        records.extend(batch)
        failures[_label(sampling)] = failed
        summary.append(_summarise(sampling, m, batch, len(failed)))
        if failed:
            logger.warning(
                "%s: %d of %d queries failed", _label(sampling), len(failed), len(workspace.queries)
            )

    sweep: list[SummaryRow] = []
    for sampling in config.sampling_plan:
        if sampling is Sampling.TOPK:
            continue
        for features in config.feature_sweep:
            done, failed = _run_batch(workspace, sampling, features, explanations_dir=None)
            sweep.append(_summarise(sampling, features, [e.record for e in done], len(failed)))

    outputs = [str(out / f"eval-{tag}.tsv"), str(out / f"summary-{tag}.tsv")]
    write_table(outputs[0], EvalRecord.columns(), (_cells(r.as_row()) for r in records))
    write_table(outputs[1], SUMMARY_COLUMNS, (_cells(s.as_row()) for s in summary))
    if config.feature_sweep:
        outputs.append(str(out / f"sweep-{tag}.csv"))
        write_table(outputs[2], SUMMARY_COLUMNS, (s.as_row() for s in sweep), delimiter=",")
    if intents:
        outputs.append(str(out / f"intents-{workspace.blackbox.name}.tsv"))
        write_intents(outputs[-1], sorted(intents.items()))
    logger.info("wrote %s", ", ".join(outputs))
    return ExperimentReport(tuple(records), tuple(summary), failures, tuple(sweep), tuple(outputs))


def _cells(row: Iterable[object]) -> list[object]:
    return ["" if v is None else v for v in row]
