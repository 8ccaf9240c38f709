#!/usr/bin/env python3
"""Explanation quality vs. pair-sampling strategy and feature count.

Generates a synthetic collection with planted intents, explains every query
with each sampling strategy, and sweeps the number of sampled pairs. Writes
one JSON file per run to benchmarks/results/.

Usage:
    python benchmarks/bench_sampling.py                       # weak mode, full sweep
    python benchmarks/bench_sampling.py --quick               # 8 topics, short sweep
    python benchmarks/bench_sampling.py --mode strong         # rank-only black box
    python benchmarks/bench_sampling.py --samplings topk,random --seed 7
"""

import argparse
import json
import platform
import sys
import sysconfig
import tempfile
import time
from pathlib import Path

from rank_intent import Sampling, generate_collection, run_experiment
from rank_intent._strategies import resolve

RESULTS_DIR = Path(__file__).resolve().parent / "results"
RESULTS_DIR.mkdir(parents=True, exist_ok=True)

ALL_SAMPLINGS = [s.label for s in Sampling]
FULL_SWEEP = [20, 50, 100, 200, 500, 1000]
QUICK_SWEEP = [20, 100, 500]


def _python_info() -> dict:
    gil_disabled = getattr(sys.flags, "nogil", False) or sysconfig.get_config_var("Py_GIL_DISABLED")
    return {
        "version": platform.python_version(),
        "implementation": platform.python_implementation(),
        "arch": platform.machine(),
        "gil_disabled": bool(gil_disabled),
    }


def _row(row) -> dict:
    return {
        "sampling": row.sampling,
        "features": row.features,
        "n_queries": row.n_queries,
        "n_failed": row.n_failed,
        **row.means,
    }


def run(args: argparse.Namespace) -> dict:
    topics = 8 if args.quick else args.topics
    sweep = QUICK_SWEEP if args.quick else FULL_SWEEP
    samplings = [resolve(Sampling, s) for s in args.samplings.split(",")]
    collection = generate_collection(seed=args.seed, n_topics=topics)
    print(f"Collection: {len(collection.documents)} docs, {len(collection.queries)} queries")

    with tempfile.TemporaryDirectory() as tmp:
        config = collection.config(
            tmp,
            mode=args.mode,
            samplings=[s.label for s in samplings],
            feature_sweep=sweep,
            workers=args.workers,
        )
        start = time.perf_counter()
        report = run_experiment(config)
        elapsed = time.perf_counter() - start

    print(f"\n{'sampling':<20} {'m':>6} {'acc':>7} {'local':>7} {'global':>7}")
    for row in (*report.summary, *report.sweep):
        m = row.means
        print(
            f"{row.sampling:<20} {row.features:>6} {m['accuracy']:>7.3f} "
            f"{m['local_fidelity']:>7.3f} {m['global_fidelity']:>7.3f}"
        )
    print(f"\n{len(report.records)} explanations in {elapsed:.1f}s")

    return {
        "python": _python_info(),
        "mode": args.mode,
        "seed": args.seed,
        "topics": topics,
        "features": config.effective_features,
        "elapsed_s": elapsed,
        "summary": [_row(r) for r in report.summary],
        "sweep": [_row(r) for r in report.sweep],
    }


def main() -> None:
    parser = argparse.ArgumentParser(description="Sampling strategy benchmark")
    parser.add_argument("--quick", action="store_true", help="8 topics and a short sweep")
    parser.add_argument("--mode", choices=["weak", "strong"], default="weak")
    parser.add_argument(
        "--samplings",
        default=",".join(ALL_SAMPLINGS),
        help=f"Comma-separated strategies (default: {','.join(ALL_SAMPLINGS)})",
    )
    parser.add_argument("--topics", type=int, default=25, help="Queries to generate (default: 25)")
    parser.add_argument("--seed", type=int, default=0, help="Collection and sampling seed")
    parser.add_argument("--workers", type=int, default=1, help="Queries explained in parallel")
    args = parser.parse_args()

    results = run(args)
    json_path = RESULTS_DIR / f"bench_sampling_{args.mode}.json"
    json_path.write_text(json.dumps(results, indent=2))
    print(f"Results saved to {json_path}")


if __name__ == "__main__":
    main()
