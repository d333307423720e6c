"""Command-line front end: run, bench, sweep and validate."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from . import tolerances as tol
from .acceptance import ALL_CRITERIA, REFERENCE_SEED, Suite, default_workers
from .analytics import aggregate
from .engine import Stop, StopCondition, TrialRecord, new_population, run_until
from .params import ProtocolParams
from .rng import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_SAFETY = 4
EXIT_CRITERION = 5

SCHEMA = "popelect.v1"

_STOPS = {
    "single-alive": Stop.SINGLE_ALIVE,
    "single-active": Stop.SINGLE_ACTIVE,
    "resolved": Stop.ALL_PASSIVE_RESOLVED,
    "epoch2-end": Stop.EPOCH2_END,
    "rounds": Stop.ROUNDS,
    "drag": Stop.DRAG,
    "max-interactions": Stop.MAX_INTERACTIONS,
}


class ConfigError(ValueError):
    pass


def _protocol_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("protocol")
    g.add_argument("--gamma", type=int, default=32, help="phase clock modulus")
    g.add_argument("--phi", type=int, default=None, help="coin level cap (default from n)")
    g.add_argument("--psi", type=int, default=None, help="drag cap (default from n)")
    g.add_argument("--backup-only", action="store_true",
                   help="start with n active leaders and only the backup rule")
    g.add_argument("--drag-advance-on-noncoin", action="store_true",
                   help="inhibitors advance on non-coins and stop on coins")
    g.add_argument("--drag-any-epoch", action="store_true",
                   help="let leader drag advance before the counter reaches 0")


def _run_args(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stop", choices=list(_STOPS), default="single-alive")
    p.add_argument("--rounds", type=int, default=1, help="for --stop rounds")
    p.add_argument("--drag-level", type=int, default=1, help="for --stop drag")
    p.add_argument("--max-interactions", type=int, default=None,
                   help=f"interaction budget (default {tol.STABILIZE_BUDGET} * n)")
    p.add_argument("--format", choices=("lines", "csv"), default="lines")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default $POPELECT_WORKERS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="popelect", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one seeded trial")
    run.add_argument("--n", type=int, required=True)
    run.add_argument("--trace", default=None, metavar="PATH",
                     help="write trace events as JSON lines ('-' for stderr)")
    _run_args(run)
    _protocol_args(run)

    bench = sub.add_parser("bench", help="many trials at one n, aggregated")
    bench.add_argument("--n", type=int, required=True)
    bench.add_argument("--trials", type=int, default=10)
    _run_args(bench)
    _protocol_args(bench)

    sweep = sub.add_parser("sweep", help="bench over a list of n")
    sweep.add_argument("--n-list", required=True, help="comma separated, ascending")
    sweep.add_argument("--trials", type=int, default=10)
    _run_args(sweep)
    _protocol_args(sweep)

    val = sub.add_parser("validate", help="acceptance criteria")
    val.add_argument("--criteria", default=",".join(map(str, ALL_CRITERIA)),
                     help="comma separated criterion numbers")
    val.add_argument("--trials", type=int, default=None,
                     help="override every per-n trial count (default: full scale)")
    val.add_argument("--seed", type=int, default=REFERENCE_SEED)
    val.add_argument("--format", choices=("lines", "csv"), default="lines")
    val.add_argument("--workers", type=int, default=None)
    val.add_argument("--drag-advance-on-noncoin", action="store_true")
    val.add_argument("--drag-any-epoch", action="store_true")
    return parser


# ------------------------------------------------------------------ helpers

def make_params(args, n: int) -> ProtocolParams:
    return ProtocolParams(
        n,
        gamma=args.gamma,
        phi=args.phi,
        psi=args.psi,
        backup_only=args.backup_only,
        drag_advance_on_noncoin=args.drag_advance_on_noncoin,
        drag_final_epoch_only=not args.drag_any_epoch,
    )


def make_stop(args, n: int) -> StopCondition:
    limit = args.max_interactions
    if limit is None:
        limit = tol.STABILIZE_BUDGET * n
    return StopCondition(_STOPS[args.stop], limit, rounds=args.rounds, level=args.drag_level)


def _envelope(rec: TrialRecord | dict, stop: StopCondition) -> dict:
    d = rec.to_dict() if isinstance(rec, TrialRecord) else dict(rec)
    return {"schema": SCHEMA, "version": __version__,
            "config": {"params": d.pop("params"), "stop": stop.kind.name.lower(),
                       "limit": stop.limit, "rounds": stop.rounds, "level": stop.level},
            "seed": d.pop("seed"), **d}


def _flatten(d: dict, prefix="") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = " ".join("" if x is None else str(x) for x in v)
        else:
            out[key] = v
    return out


def _write(rows: list[dict], fmt: str, out):
    if fmt == "lines":
        for r in rows:
            out.write(json.dumps(r, separators=(",", ":"), sort_keys=False) + "\n")
        return
    flat = [_flatten(r) for r in rows]
    fields = list(dict.fromkeys(k for r in flat for k in r))
    w = csv.DictWriter(out, fieldnames=fields)
    w.writeheader()
    w.writerows(flat)


def _trial_job(job) -> dict:
    params, seed, stop = job
    _, rec = run_until(new_population(params, seed), stop)
    return rec.to_dict()


def _run_many(params, seeds, stop, workers) -> list[dict]:
    jobs = [(params, s, stop) for s in seeds]
    workers = workers or default_workers()
    if workers == 1 or len(jobs) == 1:
        return [_trial_job(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_trial_job, jobs))


def _records_exit(records: list[dict], err, stop: StopCondition) -> int:
    bad = [r for r in records if r["safety_violation"]]
    if bad:
        for r in bad:
            err.write(f"safety violation; replay with --seed {r['seed']}\n")
        return EXIT_SAFETY
    if stop.kind != Stop.MAX_INTERACTIONS and any(r["exhausted"] for r in records):
        return EXIT_BUDGET
    return EXIT_OK


# ----------------------------------------------------------------- commands

def cmd_run(args, out, err) -> int:
    params = make_params(args, args.n)
    stop = make_stop(args, args.n)
    sink, fh = None, None
    if args.trace:
        fh = err if args.trace == "-" else open(args.trace, "w")
        sink = lambda ev: fh.write(ev.to_json() + "\n")  # noqa: E731
    try:
        _, rec = run_until(new_population(params, args.seed, trace_sink=sink), stop)
    finally:
        if fh is not None and fh is not err:
            fh.close()
    _write([_envelope(rec, stop)], args.format, out)
    return _records_exit([rec.to_dict()], err, stop)


def _bench(args, n, trials):
    if trials < 1:
        raise ConfigError("--trials must be at least 1")
    params = make_params(args, n)
    stop = make_stop(args, n)
    seeds = [derive_seed(args.seed, k) for k in range(trials)]
    return params, stop, _run_many(params, seeds, stop, args.workers)


def _agg_row(recs: list[dict], stop) -> dict:
    trial_objs = [TrialRecord(**{k: v for k, v in r.items() if k != "stabilization_parallel_time"})
                  for r in recs]
    agg = json.loads(aggregate(trial_objs).to_json())
    return {"schema": SCHEMA, "version": __version__, "kind": "aggregate",
            "config": {"params": agg.pop("params"), "stop": stop.kind.name.lower(),
                       "limit": stop.limit},
            **agg}


def cmd_bench(args, out, err) -> int:
    _, stop, recs = _bench(args, args.n, args.trials)
    rows = [_agg_row(recs, stop)]
    if args.format == "lines":
        rows = [_envelope(r, stop) for r in recs] + rows
    _write(rows, args.format, out)
    return _records_exit(recs, err, stop)


def cmd_sweep(args, out, err) -> int:
    try:
        ns = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("--n-list must be comma separated integers")
    if not ns or ns != sorted(ns) or len(set(ns)) != len(ns):
        raise ConfigError("--n-list must be non-empty and strictly ascending")
    rows, code = [], EXIT_OK
    for n in ns:
        _, stop, recs = _bench(args, n, args.trials)
        row = _agg_row(recs, stop)
        L = math.log2(n)
        med = row["median_time"]
        row["n"] = n
        row["time_per_log2n"] = med / L if med is not None else None
        row["time_per_log2sq"] = med / L**2 if med is not None else None
        row["time_per_logloglog"] = med / (L * math.log2(L)) if med is not None else None
        rows.append(row)
        code = max(code, _records_exit(recs, err, stop))
    if args.format == "csv":
        cols = ["n", "trials", "completed", "exhausted", "safety_violations", "median_time",
                "mean_time", "time_per_log2n", "time_per_log2sq", "time_per_logloglog"]
        rows = [{k: r[k] for k in cols} for r in rows]
    _write(rows, args.format, out)
    return code


def cmd_validate(args, out, err) -> int:
    try:
        which = [int(x) for x in args.criteria.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("--criteria must be comma separated integers")
    if not which:
        raise ConfigError("empty criterion selection")
    if any(c not in ALL_CRITERIA for c in which):
        raise ConfigError(f"criteria must be among {ALL_CRITERIA}")
    variant = {}
    if args.drag_advance_on_noncoin:
        variant["drag_advance_on_noncoin"] = True
    if args.drag_any_epoch:
        variant["drag_final_epoch_only"] = False
    suite = Suite(trials=args.trials, master_seed=args.seed, workers=args.workers,
                  variant=variant, log=lambda m: err.write(m + "\n"))
    results = suite.run(which)
    rows = [{"schema": SCHEMA, "version": __version__, "tolerance_version": tol.TOLERANCE_VERSION,
             "seed": args.seed, "variant": variant, "criterion": r.number, "name": r.name,
             "passed": r.passed, "summary": r.summary} for r in results]
    _write(rows, args.format, out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CRITERION


_COMMANDS = {"run": cmd_run, "bench": cmd_bench, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with status 2
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args, out, err)
    except (ConfigError, ValueError) as e:
        err.write(f"config error: {e}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
