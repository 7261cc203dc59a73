#!/usr/bin/env python3
"""Desk-scale synthetic-benchmark comparison.

Runs ucb / credit_ucb / random over the five synthetic benchmarks and
prints the AUSR table. Scale it down with --seeds/--budget for a quick
look, up for smoother statistics.

Usage:
    python scripts/synthetic_sweep.py --out results/sweep --seeds 20 --budget 50
    python scripts/synthetic_sweep.py --benchmarks hartmann6 levy8 --parallel 4
"""

import argparse
import sys
from pathlib import Path

from creditbo.cli import parse_config, run_experiment

BENCHMARKS = ["langermann2", "hartmann6", "griewank6", "levy8", "rosenbrock10"]
METHODS = ["ucb", "credit_ucb", "random"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/sweep", help="trace directory")
    parser.add_argument("--seeds", type=int, default=20, help="number of repeats")
    parser.add_argument("--budget", type=int, default=50, help="iterations per run")
    parser.add_argument("--parallel", type=int, default=1)
    parser.add_argument("--benchmarks", nargs="*", default=BENCHMARKS)
    parser.add_argument("--methods", nargs="*", default=METHODS)
    args = parser.parse_args()

    lines = [
        f"output_dir: {args.out}",
        f"seed_count: {args.seeds}",
        f"parallel: {args.parallel}",
        "runs:",
    ]
    for benchmark in args.benchmarks:
        for method in args.methods:
            lines.append(f"  - {{benchmark: {benchmark}, method: {method}, budget: {args.budget}}}")
    cfg = parse_config("\n".join(lines))

    Path(args.out).mkdir(parents=True, exist_ok=True)
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
