"""Config-driven experiment runner.

Reads a YAML experiment file, sweeps run templates over seeds (optionally in
parallel processes), persists one CSV trace per run plus a per-group summary,
and recomputes summaries from trace directories on demand.

Subcommands: ``run <config>``, ``summarize <dir>``, ``list-benchmarks``.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from .acquisition import ACQUISITION_KINDS, AcquisitionSpec
from .benchmarks import benchmark_names, get_benchmark
from .metrics import RegretTrace, aggregate, ausr, regret_traces
from .optimizer import RunConfig, RunResult, run

__all__ = [
    "ExperimentConfig",
    "TraceRecord",
    "SummaryRow",
    "ConfigError",
    "parse_config",
    "load_config",
    "run_experiment",
    "write_trace",
    "read_trace",
    "summarize",
    "main",
]

OUTPUT_DIR_ENV = "CREDITBO_OUT_DIR"

_TOP_KEYS = {"output_dir", "seeds", "seed_base", "seed_count", "parallel", "runs"}
_RUN_KEYS = {
    "benchmark": str,
    "method": str,
    "budget": int,
    "proxy_paths": int,
    "neighbors": int,
    "half_life": float,
    "lambda": float,
    "tau": float,
    "delta": float,
    "candidates": int,
    "grid_size": int,
    "noise_variance": float,
    "n_init": int,
    "high_d": bool,
    "ard": bool,
    "mle_restarts": int,
    "nonneg_shift": bool,
}


class ConfigError(ValueError):
    """Raised for syntactic or semantic problems in an experiment config."""


@dataclass
class ExperimentConfig:
    """A sweep: run templates x seeds, plus where and how to execute."""

    runs: list
    seeds: list
    output_dir: Path
    parallel: int = 1


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _coerce(key: str, value, kind):
    if kind is bool:
        _require(isinstance(value, bool), f"field {key!r} must be a boolean")
        return value
    if kind is int:
        _require(isinstance(value, int) and not isinstance(value, bool), f"field {key!r} must be an integer")
        return value
    if kind is float:
        _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"field {key!r} must be a number")
        return float(value)
    _require(isinstance(value, str), f"field {key!r} must be a string")
    return value


def _template_from_section(section: dict, index: int) -> RunConfig:
    _require(isinstance(section, dict), f"run template #{index} must be a mapping")
    unknown = set(section) - set(_RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in run template #{index}")
    _require("benchmark" in section, f"run template #{index} is missing 'benchmark'")
    _require("method" in section, f"run template #{index} is missing 'method'")
    values = {}
    for key, raw in section.items():
        if raw is None and key == "n_init":
            values[key] = None
            continue
        values[key] = _coerce(key, raw, _RUN_KEYS[key])

    method = values["method"]
    _require(method in ACQUISITION_KINDS, f"field 'method' must be one of {ACQUISITION_KINDS}")
    lam = values.get("lambda", 0.5)
    _require(0.0 <= lam <= 1.0, "field 'lambda' must lie in [0, 1]")
    tau = values.get("tau", 1.0)
    _require(tau > 0, "field 'tau' must be positive")
    delta = values.get("delta", 0.1)
    _require(0.0 < delta < 1.0, "field 'delta' must lie in (0, 1)")
    half_life = values.get("half_life", 20.0)
    _require(half_life > 0, "field 'half_life' must be positive")

    try:
        get_benchmark(values["benchmark"])
    except KeyError as exc:
        raise ConfigError(str(exc)) from None

    spec = AcquisitionSpec(
        kind=method,
        lam=lam,
        tau=tau,
        half_life=half_life,
        delta=delta,
        candidate_count=values.get("candidates", 2048),
        nonneg_shift=values.get("nonneg_shift", False),
    )
    try:
        return RunConfig(
            benchmark=values["benchmark"],
            acquisition=spec,
            budget=values.get("budget", 100),
            proxy_paths=values.get("proxy_paths", 25),
            neighbor_count=values.get("neighbors", 5),
            noise_variance=values.get("noise_variance", 0.01),
            n_init=values.get("n_init"),
            high_d=values.get("high_d", False),
            ard=values.get("ard", False),
            grid_size=values.get("grid_size", 256),
            mle_restarts=values.get("mle_restarts", 8),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML experiment document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    _require(isinstance(doc, dict), "config must be a mapping at the top level")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} at the top level")
    _require("runs" in doc and isinstance(doc["runs"], list) and doc["runs"],
             "config needs a non-empty 'runs' list")

    if "seeds" in doc:
        _require("seed_base" not in doc and "seed_count" not in doc,
                 "give either 'seeds' or 'seed_base'/'seed_count', not both")
        seeds = doc["seeds"]
        _require(isinstance(seeds, list) and seeds and all(
            isinstance(s, int) and not isinstance(s, bool) for s in seeds),
            "field 'seeds' must be a non-empty list of integers")
    else:
        base = doc.get("seed_base", 0)
        _require(isinstance(base, int) and not isinstance(base, bool),
                 "field 'seed_base' must be an integer")
        count = doc.get("seed_count")
        _require(isinstance(count, int) and not isinstance(count, bool) and count >= 1,
                 "config needs 'seeds' or a positive 'seed_count'")
        seeds = list(range(base, base + count))

    parallel = doc.get("parallel", 1)
    _require(isinstance(parallel, int) and not isinstance(parallel, bool) and parallel >= 1,
             "field 'parallel' must be a positive integer")

    default_out = os.environ.get(OUTPUT_DIR_ENV, "results")
    output_dir = doc.get("output_dir", default_out)
    _require(isinstance(output_dir, str) and output_dir, "field 'output_dir' must be a path")

    templates = [_template_from_section(sec, i) for i, sec in enumerate(doc["runs"])]
    return ExperimentConfig(
        runs=templates,
        seeds=list(seeds),
        output_dir=Path(output_dir),
        parallel=parallel,
    )


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Trace persistence
# ---------------------------------------------------------------------------


@dataclass
class TraceRecord:
    """One persisted run: identity, regret trace, and the query list."""

    run_id: str
    seed: int
    method: str
    benchmark: str
    trace: RegretTrace
    best_true: np.ndarray
    points: np.ndarray


def run_id_for(config: RunConfig) -> str:
    return f"{config.benchmark}__{config.acquisition.kind}__seed{config.seed}"


def write_trace(path: Path, result: RunResult, trace: RegretTrace) -> None:
    """Write one run as a CSV trace; floats use shortest round-trip text."""
    dim = result.dimension
    run_id = run_id_for(result.config)
    header = ["run_id", "seed", "method", "benchmark", "iteration",
              "simple_regret", "cumulative_regret", "best_true_value"]
    header += [f"x{i}" for i in range(dim)]
    lines = [",".join(header)]
    for i in range(result.points.shape[0]):
        row = [
            run_id,
            str(result.config.seed),
            result.config.acquisition.kind,
            result.config.benchmark,
            str(i),
            repr(float(trace.simple[i])),
            repr(float(trace.cumulative[i])),
            repr(float(result.best_true[i])),
        ]
        row += [repr(float(v)) for v in result.points[i]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> TraceRecord:
    """Read a trace CSV back into arrays; inverse of write_trace."""
    lines = Path(path).read_text().strip().splitlines()
    if len(lines) < 2:
        raise ValueError(f"trace file {path} has no data rows")
    header = lines[0].split(",")
    coord_cols = [h for h in header if h.startswith("x")]
    rows = [line.split(",") for line in lines[1:]]
    first = rows[0]
    simple = np.array([float(r[5]) for r in rows])
    cumulative = np.array([float(r[6]) for r in rows])
    best_true = np.array([float(r[7]) for r in rows])
    points = np.array([[float(v) for v in r[8 : 8 + len(coord_cols)]] for r in rows])
    return TraceRecord(
        run_id=first[0],
        seed=int(first[1]),
        method=first[2],
        benchmark=first[3],
        trace=RegretTrace(simple=simple, cumulative=cumulative, ausr=ausr(simple)),
        best_true=best_true,
        points=points,
    )


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _execute_one(args) -> tuple[str, str]:
    """Worker: run one config and persist its trace. Returns (run_id, error)."""
    config, out_dir = args
    rid = run_id_for(config)
    try:
        result = run(config)
        f_star = get_benchmark(config.benchmark).optimum_value
        trace = regret_traces(result, f_star)
        write_trace(Path(out_dir) / f"{rid}.csv", result, trace)
        return rid, ""
    except Exception:
        return rid, traceback.format_exc()


@dataclass
class SummaryRow:
    benchmark: str
    method: str
    count: int
    ausr_mean: float
    ausr_std: float
    final_simple_mean: float
    final_simple_stderr: float


def _summary_rows(records: list[TraceRecord]) -> list[SummaryRow]:
    groups: dict[tuple[str, str], list[TraceRecord]] = {}
    for rec in records:
        groups.setdefault((rec.benchmark, rec.method), []).append(rec)
    rows = []
    for (benchmark, method), members in sorted(groups.items()):
        length = members[0].trace.simple.size
        for rec in members:
            if rec.trace.simple.size != length:
                raise ValueError(
                    f"run {rec.run_id} has {rec.trace.simple.size} iterations, "
                    f"expected {length} for group {benchmark}/{method}"
                )
        stats = aggregate([rec.trace for rec in members])
        finals = np.array([rec.trace.simple[-1] for rec in members])
        stderr = float(finals.std(ddof=1) / np.sqrt(finals.size)) if finals.size > 1 else 0.0
        rows.append(SummaryRow(
            benchmark=benchmark,
            method=method,
            count=len(members),
            ausr_mean=stats.ausr_mean,
            ausr_std=stats.ausr_std,
            final_simple_mean=float(finals.mean()),
            final_simple_stderr=stderr,
        ))
    return rows


def _write_summary(path: Path, rows: list[SummaryRow]) -> None:
    stamp = datetime.now(timezone.utc).isoformat()
    lines = ["benchmark,method,runs,ausr_mean,ausr_std,final_simple_mean,final_simple_stderr,generated_at"]
    for r in rows:
        lines.append(
            f"{r.benchmark},{r.method},{r.count},{r.ausr_mean!r},{r.ausr_std!r},"
            f"{r.final_simple_mean!r},{r.final_simple_stderr!r},{stamp}"
        )
    path.write_text("\n".join(lines) + "\n")


def _print_rows(rows: list[SummaryRow], stream=None) -> None:
    stream = stream or sys.stdout
    print(f"{'benchmark':<18}{'method':<12}{'runs':>5}{'AUSR mean':>14}{'AUSR std':>12}"
          f"{'final mean':>14}{'final se':>12}", file=stream)
    for r in rows:
        print(f"{r.benchmark:<18}{r.method:<12}{r.count:>5}{r.ausr_mean:>14.4f}"
              f"{r.ausr_std:>12.4f}{r.final_simple_mean:>14.6f}{r.final_simple_stderr:>12.6f}",
              file=stream)


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute every template x seed, persist traces and a summary.

    Returns a process exit status: non-zero when any run failed.  Failures
    are written alongside the traces as <run_id>.failed.txt and do not stop
    the remaining runs.
    """
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write-probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None

    jobs = [(replace(template, seed=seed), str(out))
            for template in cfg.runs for seed in cfg.seeds]
    failures = 0
    if cfg.parallel > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            outcomes = list(pool.map(_execute_one, jobs))
    else:
        outcomes = [_execute_one(job) for job in jobs]
    for rid, error in outcomes:
        if error:
            failures += 1
            (out / f"{rid}.failed.txt").write_text(error)
            print(f"FAILED {rid}", file=sys.stderr)

    records = [read_trace(p) for p in sorted(out.glob("*.csv")) if p.name != "summary.csv"]
    if records:
        rows = _summary_rows(records)
        _write_summary(out / "summary.csv", rows)
        _print_rows(rows)
    return 1 if failures else 0


def summarize(trace_dir) -> list[SummaryRow]:
    """Recompute the per-(benchmark, method) summary from persisted traces."""
    trace_dir = Path(trace_dir)
    paths = [p for p in sorted(trace_dir.glob("*.csv")) if p.name != "summary.csv"]
    if not paths:
        raise FileNotFoundError(f"no runs found under {trace_dir}")
    rows = _summary_rows([read_trace(p) for p in paths])
    _write_summary(trace_dir / "summary.csv", rows)
    return rows


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def _parse_seed_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"--seeds expects comma-separated integers, got {text!r}") from None


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.seeds is not None:
        cfg.seeds = _parse_seed_list(args.seeds)
    if args.parallel is not None:
        cfg.parallel = args.parallel
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    if args.method is not None:
        if args.method not in ACQUISITION_KINDS:
            raise ConfigError(f"--method must be one of {ACQUISITION_KINDS}")
        cfg.runs = [replace(t, acquisition=replace(t.acquisition, kind=args.method))
                    for t in cfg.runs]
    if args.benchmark is not None:
        try:
            get_benchmark(args.benchmark)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        cfg.runs = [replace(t, benchmark=args.benchmark) for t in cfg.runs]
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="creditbo",
        description="Credit-weighted Bayesian optimization experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the runs described by a YAML config")
    p_run.add_argument("config", help="path to the experiment YAML file")
    p_run.add_argument("--seed", type=int, default=None, help="run a single seed")
    p_run.add_argument("--seeds", default=None, help="comma-separated seed list")
    p_run.add_argument("--parallel", type=int, default=None, help="worker processes")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--method", default=None, help="override the method of every template")
    p_run.add_argument("--benchmark", default=None, help="override the benchmark of every template")

    p_sum = sub.add_parser("summarize", help="rebuild the summary table from a trace directory")
    p_sum.add_argument("dir", help="directory holding per-run trace CSVs")

    sub.add_parser("list-benchmarks", help="print the benchmark registry")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _apply_overrides(load_config(args.config), args)
            return run_experiment(cfg)
        if args.command == "summarize":
            _print_rows(summarize(args.dir))
            return 0
        for name in benchmark_names():
            print(name)
        print("(embedded variants: '<base>_<dim>', e.g. levy4_100)")
        return 0
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
