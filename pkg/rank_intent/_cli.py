"""``rank-intent`` command line.

Exit codes: 0 success, 1 discordant pair, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from rank_intent._config import ExperimentConfig
from rank_intent._errors import (
    ConfigError,
    ContractError,
    DataError,
    DiscordantPairError,
    QuerySkipped,
)
from rank_intent._harness import (
    Explanation,
    Workspace,
    explain_pair,
    explain_query,
    load_index,
    load_workspace,
    run_experiment,
    select_candidates,
    term_contributions,
    write_candidates,
)
from rank_intent._index import Query, build_index
from rank_intent._io import atomic_write_text, dump_json, read_corpus
from rank_intent._preference import PreferenceMatrix
from rank_intent._rankers import ExplanationRanker
from rank_intent._solver import exact_select, greedy_select
from rank_intent._synthetic import SyntheticSpec, generate_collection

logger = logging.getLogger(__name__)

EXIT_DISCORDANT = 1
EXIT_CONFIG = 2
EXIT_DATA = 3

# CLI flag -> config key
_OVERRIDES = {
    "corpus": "corpus_path",
    "queries": "queries_path",
    "embeddings": "embeddings_path",
    "intents": "intents_path",
    "index": "index_path",
    "out": "output_dir",
    "blackbox": "blackbox",
    "mode": "mode",
    "sampling": "sampling",
    "features": "features",
    "seed": "seed",
    "caps": "caps",
    "k": "k",
    "budget": "budget",
    "workers": "workers",
}


def _caps(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        msg = f"caps must be comma-separated integers: {text!r}"
        raise argparse.ArgumentTypeError(msg) from None


def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags below override it")
    p.add_argument("--corpus", help="JSONL corpus ({'id', 'text'} per line)")
    p.add_argument("--queries", help="TSV of query_id<TAB>text")
    p.add_argument("--embeddings", help="word vectors, one 'word v1 ... vn' per line")
    p.add_argument("--intents", help="TSV of query_id<TAB>term... for the planted black box")
    p.add_argument("--index", help="saved index (used instead of --corpus when it exists)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--blackbox", help="rm3-10, rm3-20, emb, desm or planted")
    p.add_argument("--mode", choices=["weak", "strong"])
    p.add_argument(
        "--sampling", help="topk, random, rank-biased, topk-random or topk-rank-random"
    )
    p.add_argument("--features", type=int, help="sampled pairs per query (m)")
    p.add_argument("--seed", type=int)
    p.add_argument("--caps", type=_caps, help="candidate caps, e.g. 1000,500,250")
    p.add_argument("--k", type=int, help="documents to explain")
    p.add_argument("--budget", type=int, help="maximum |T_q|")
    p.add_argument("--workers", type=int)
    p.add_argument("--exact", action="store_true", help="exhaustive solver when it fits")
    p.add_argument("--stem", action="store_true", help="Porter-stem documents and queries")


def _config(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides: dict[str, Any] = {}
    for flag, key in _OVERRIDES.items():
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    if args.exact:
        overrides["exact"] = True
    if args.stem:
        overrides["stem"] = True
    return base.replace(**overrides) if overrides else base


def _selected_queries(workspace: Workspace, query_id: str | None) -> tuple[Query, ...]:
    return workspace.queries if query_id is None else (workspace.query(query_id),)


def _cmd_index(args: argparse.Namespace) -> int:
    index = build_index(read_corpus(args.corpus), stem=args.stem)
    index.save(args.out)
    print(f"{index!r} -> {args.out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(seed=args.seed, n_topics=args.topics, docs_per_topic=args.docs_per_topic)
    collection = generate_collection(spec)
    config = collection.config(args.out)
    config_path = Path(args.out) / "config.json"
    atomic_write_text(config_path, dump_json(config.to_dict()))
    print(f"{len(collection.documents)} documents, {len(collection.queries)} queries -> {args.out}")
    print(f"config: {config_path}")
    return 0


def _skipped(exc: QuerySkipped) -> None:
    logger.warning("%s", exc)
    print(f"{exc.query_id}\tskipped: {exc.reason}")


def _cmd_candidates(args: argparse.Namespace) -> int:
    config = _config(args)
    workspace = load_workspace(config)
    out = Path(config.output_dir) / "candidates"
    queries = _selected_queries(workspace, args.query)
    skipped = 0
    for query in queries:
        try:
            stages = select_candidates(workspace, query, workers=config.workers)
        except QuerySkipped as exc:
            _skipped(exc)
            skipped += 1
            continue
        path = out / f"{query.query_id}.tsv"
        write_candidates(path, stages)
        sizes = " -> ".join(str(len(s)) for s in stages)
        print(f"{query.query_id}\t{sizes}\t{path}")
    return EXIT_DATA if queries and skipped == len(queries) else 0


def _cmd_explain(args: argparse.Namespace) -> int:
    config = _config(args)
    workspace = load_workspace(config)
    out = Path(config.output_dir) / "explanations"
    artifacts = out if config.keep_intermediates or args.intermediates else None
    queries = _selected_queries(workspace, args.query)
    skipped = 0
    for query in queries:
        try:
            explanation = explain_query(config, query, workspace, artifacts_dir=artifacts)
        except QuerySkipped as exc:
            _skipped(exc)
            skipped += 1
            continue
        path = out / f"{query.query_id}.json"
        explanation.save(path)
        print(f"{query.query_id}\t{' '.join(explanation.terms)}\t{path}")
    return EXIT_DATA if queries and skipped == len(queries) else 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.sweep:
        config = config.replace(feature_sweep=[int(m) for m in args.sweep.split(",")])
    report = run_experiment(config)
    for row in report.summary:
        means = "  ".join(
            f"{name}={'-' if v is None else f'{v:.4f}'}" for name, v in row.means.items()
        )
        print(f"{row.sampling:<18} n={row.n_queries} failed={row.n_failed}  {means}")
    for path in report.outputs:
        print(path)
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    matrix = PreferenceMatrix.load(args.matrix)
    if args.exact:
        selection = exact_select(matrix, args.budget)
    else:
        selection = greedy_select(matrix, args.budget, psum_mode=args.psum_mode)
    print(
        dump_json(
            {
                "query_id": matrix.query_id,
                "method": selection.method,
                "terms": list(selection.terms),
                "coverage": selection.coverage,
                "pairs": matrix.shape[1],
                "utilities": list(selection.utilities),
            }
        ),
        end="",
    )
    return 0


def _cmd_pair(args: argparse.Namespace) -> int:
    config = _config(args)
    explanation = Explanation.load(args.explanation)
    ranker = ExplanationRanker(load_index(config), config.delta)
    if args.docs:
        table = term_contributions(explanation, args.docs.split(","), ranker)
        print("\t".join(["term", *table.doc_ids]))
        for term, values in zip(table.terms, table.values.tolist(), strict=True):
            print("\t".join([term, *(repr(v) for v in values)]))
        print("\t".join(["total", *(repr(float(v)) for v in table.totals())]))
        return 0
    breakdown = explain_pair(explanation, args.a, args.b, ranker)
    print(f"term\t{breakdown.doc_a}\t{breakdown.doc_b}\tdifference")
    for term, sa, sb, diff in breakdown.rows():
        print(f"{term}\t{sa!r}\t{sb!r}\t{diff!r}")
    print(f"total\t{breakdown.total_a!r}\t{breakdown.total_b!r}\t{breakdown.difference!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rank-intent", description="Explain black-box rankers with expansion-term intents"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="tokenize a corpus and save the index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stem", action="store_true")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("synth", help="write a synthetic collection with planted intents")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--topics", type=int, default=25)
    p.add_argument("--docs-per-topic", type=int, default=24)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("candidates", help="write the candidate stages per query")
    _add_config_options(p)
    p.add_argument("--query", help="only this query id")
    p.set_defaults(func=_cmd_candidates)

    p = sub.add_parser("explain", help="explain each query and save the explanation JSON")
    _add_config_options(p)
    p.add_argument("--query", help="only this query id")
    p.add_argument(
        "--intermediates", action="store_true", help="also write candidate and matrix TSVs"
    )
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("evaluate", help="run every configured sampling and write the reports")
    _add_config_options(p)
    p.add_argument("--sweep", help="feature counts for the sweep CSV, e.g. 100,250,500")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("solve", help="select terms from a saved preference matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--psum-mode", default="positive", choices=["positive", "covered"])
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("pair", help="per-term breakdown of a document pair")
    _add_config_options(p)
    p.add_argument("--explanation", required=True, help="explanation JSON")
    p.add_argument("--a", help="first document id")
    p.add_argument("--b", help="second document id")
    p.add_argument("--docs", help="comma-separated doc ids for a contribution table instead")
    p.set_defaults(func=_cmd_pair)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "pair" and not args.docs and not (args.a and args.b):
        parser.error("pair needs --a and --b, or --docs")
    try:
        return args.func(args)
    except DiscordantPairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCORDANT
    except (ConfigError, ContractError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, QuerySkipped) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
