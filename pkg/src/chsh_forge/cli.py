"""Command-line front end: ``chsh-forge run | prove | sweep``.

Exit status: 0 when the pipeline ran (a detected assumption violation is a
result, not an error), 2 on a contract breach such as setting leakage,
1 on usage errors, bad parameters or unreadable input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import ContractBreach, ForgeError, InvalidParameterError
from .models import MODEL_NAMES, build_model, build_source
from .pipeline import DEFAULT_ALPHA, DEFAULT_ITERATIONS, SCHEMA, prove_table, run_pipeline
from .reorder import write_joint_csv
from .stats import reorder_tolerance
from .tabulator import read_table_csv, write_event_log, write_table_csv

EXIT_OK, EXIT_USAGE, EXIT_BREACH = 0, 1, 2
THREADS_ENV = "CHSH_FORGE_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = _value(val.strip())
    return out


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _add_common(p):
    p.add_argument("--model", required=True, help="one of: " + ", ".join(MODEL_NAMES))
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter (repeatable)")
    p.add_argument("--source", default="uniform", help="uniform, conspiracy:max or conspiracy:min")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS, help="shuffles for the conspiracy test")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chsh-forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a model and run the full pipeline")
    _add_common(run)
    run.add_argument("--trials", type=int, default=10_000)
    run.add_argument("--seed", type=_seed, default=0)
    run.add_argument("--table", help="write the potential-outcome table as CSV")
    run.add_argument("--joint", help="write the joint table as CSV (when derived)")
    run.add_argument("--events", help="write the trial event log as JSON lines")

    prove = sub.add_parser("prove", help="replay the reordering argument on a CSV table")
    prove.add_argument("--table", required=True)
    prove.add_argument("--tolerance", type=int, help="integer discrepancy slack (default: from --alpha)")
    prove.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    prove.add_argument("--out")
    prove.add_argument("--joint")
    prove.add_argument("--no-timestamp", action="store_true")

    sweep = sub.add_parser("sweep", help="run a model over several trial counts and seeds")
    _add_common(sweep)
    sweep.add_argument("--trials-list", required=True, help="comma-separated trial counts")
    sweep.add_argument("--seeds", type=int, default=20, help="number of seeds per trial count")
    return parser


def _emit(report: dict, path: str | None, timestamp: bool):
    if timestamp:
        report = {"schema": report["schema"],
                  "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                  **{k: v for k, v in report.items() if k != "schema"}}
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    result = run_pipeline(args.model, _params(args.param), args.source, args.trials,
                          args.seed, args.alpha, args.iterations)
    if args.table:
        write_table_csv(result.table, args.table)
    if args.joint and result.joint is not None:
        write_joint_csv(result.joint, args.joint)
    if args.events:
        write_event_log(result.logs, args.events)
    _emit(result.report, args.out, not args.no_timestamp)
    return EXIT_OK


def cmd_prove(args) -> int:
    table = read_table_csv(args.table)
    if len(table) == 0:
        raise InvalidParameterError("table has no rows")
    tol = args.tolerance if args.tolerance is not None else reorder_tolerance(len(table), args.alpha)
    if tol < 0:
        raise InvalidParameterError("tolerance must be non-negative")
    report, replay = prove_table(table, tol)
    report = {"schema": report["schema"], "input": os.fspath(args.table), **{k: v for k, v in report.items() if k != "schema"}}
    if args.joint and replay.joint is not None:
        write_joint_csv(replay.joint, args.joint)
    _emit(report, args.out, not args.no_timestamp)
    return EXIT_OK


def _sweep_cell(job):
    model, params, source, n, seed, alpha, iterations = job
    r = run_pipeline(model, params, source, n, seed, alpha, iterations).report
    tol = r["tolerances"]["chsh"]
    filtered = r["chsh"]["filtered"]
    return {
        "n": n,
        "seed": seed,
        "filtered_chsh": filtered,
        "full_chsh": r["chsh"]["full"],
        "chsh_tolerance": tol,
        "within_local_bound": None if filtered is None or tol is None else filtered <= 2.0 + tol,
        "reorder_failure": r["reorder"].get("failure"),
        "joint_chsh": r["joint"] and r["joint"]["chsh"],
    }


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        v = int(raw)
    except ValueError:
        v = 0
    if v < 1:
        raise InvalidParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return v


def cmd_sweep(args) -> int:
    try:
        counts = [int(x) for x in args.trials_list.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--trials-list must be comma-separated integers, got {args.trials_list!r}") from None
    if len(counts) < 2:
        raise InvalidParameterError("need ≥ 2 trial counts")
    if args.seeds < 1:
        raise InvalidParameterError("--seeds must be >= 1")
    params = _params(args.param)
    jobs = [(args.model, params, args.source, n, seed, args.alpha, args.iterations)
            for n in counts for seed in range(args.seeds)]
    # fail fast on bad input before starting workers
    build_model(args.model, **params)
    build_source(args.source)
    if min(counts) < 1:
        raise InvalidParameterError("trial counts must be >= 1")
    workers = min(worker_count(), len(jobs))
    if workers == 1:
        cells = [_sweep_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_sweep_cell, jobs))
    summary = []
    for n in counts:
        rows = [c for c in cells if c["n"] == n]
        values = [c["filtered_chsh"] for c in rows if c["filtered_chsh"] is not None]
        tols = [c["chsh_tolerance"] for c in rows if c["chsh_tolerance"] is not None]
        summary.append({
            "n": n,
            "runs": len(rows),
            "max_filtered_chsh": max(values) if values else None,
            "mean_filtered_chsh": sum(values) / len(values) if values else None,
            "max_excess_over_2": max(values) - 2.0 if values else None,
            "max_chsh_tolerance": max(tols) if tols else None,
            "runs_above_local_bound": sum(1 for c in rows if c["within_local_bound"] is False),
            "reorder_failures": sum(1 for c in rows if c["reorder_failure"]),
        })
    report = {
        "schema": SCHEMA,
        "config": {"model": args.model, "params": params, "source": args.source, "trials": counts,
                   "seeds": args.seeds, "alpha": args.alpha, "iterations": args.iterations},
        "summary": summary,
        "cells": cells,
    }
    _emit(report, args.out, not args.no_timestamp)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "prove": cmd_prove, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"chsh-forge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractBreach as exc:
        print(f"chsh-forge: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except ForgeError as exc:
        print(f"chsh-forge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"chsh-forge: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
