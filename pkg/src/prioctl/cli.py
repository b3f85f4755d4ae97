"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 static-check failure,
3 runtime deadlock, 4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import analysis, harness, modelfile
from .model import ModelError, TooLargeError
from .netsim import SCHEDULES, LatencyModel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
EXIT_DEADLOCK = 3
EXIT_INVALID = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def int_range(text: str) -> list[int]:
    """``3``, ``0..4`` (inclusive) or ``1,3,5``."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _read_model(path: str) -> modelfile.ModelFile:
    with open(path) as fh:
        return modelfile.parse(fh.read())


def cmd_check(args: argparse.Namespace) -> int:
    mf = _read_model(args.model)
    cyc = mf.priority_cycle()
    if cyc is not None:
        report = {"order_valid": False, "order_cycle": cyc}
        if args.json:
            print(json.dumps(report, indent=2))
        else:
            print("priority order: CYCLIC " + " < ".join(cyc + cyc[:1]))
        return EXIT_CHECK
    sys_ = mf.build()
    report = analysis.check_report(sys_, args.state_cap)
    print(json.dumps(report, indent=2) if args.json else analysis.render_report(report))
    return EXIT_OK if report["order_valid"] and not report["confusion"] else EXIT_CHECK


def cmd_run(args: argparse.Namespace) -> int:
    mf = _read_model(args.model)
    cyc = mf.priority_cycle()
    if cyc is not None:
        print("priority order is cyclic: " + " < ".join(cyc + cyc[:1]), file=sys.stderr)
        return EXIT_CHECK
    sys_ = mf.build()
    if not args.force:
        confusion = analysis.detect_confusion(sys_)
        if confusion:
            print(f"system has prioritized confusion ({len(confusion)} witness(es)); "
                  "use --force to run anyway", file=sys.stderr)
            return EXIT_CHECK
    max_ms = args.max_sim_ms
    if max_ms is None and args.max_interactions is None:
        max_ms = 100.0
    result = harness.run_simulation(
        sys_,
        seed=args.seed,
        latency=LatencyModel(args.latency_ms, args.jitter_ms),
        schedule=args.schedule,
        max_interactions=args.max_interactions,
        max_sim_ms=max_ms,
        start=args.start,
        cyclebreaking=not args.no_cyclebreaking,
    )
    ends = harness.cycle_ends(sys_) or None
    report = harness.measure(result, sync_from=args.sync_from, cycles=ends)
    print(f"outcome: {result.outcome}")
    print(report.render())
    if args.trace:
        result.trace.dump(args.trace)
    try:
        verdict = harness.validate_run(result, exhaustive=args.validate == "exhaustive")
    except TooLargeError as exc:
        print(f"exhaustive validation impossible: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.csv:
        row = harness.csv_row(args.model, args.seed, 0, report, verdict)
        with open(args.csv, "w") as fh:
            harness.write_csv([row], fh)
    if result.deadlock:
        print("deadlock: no progress although interactions are globally ready")
        print("final state: " + ", ".join(
            f"{p.id}={s}" for p, s in zip(sys_.processes, result.final_state())))
        return EXIT_DEADLOCK
    print(f"validation: {verdict.describe()}")
    return EXIT_OK if verdict.ok else EXIT_INVALID


def _bench_configs(args: argparse.Namespace) -> list[harness.BenchmarkConfig]:
    latency = LatencyModel(args.latency_ms, args.jitter_ms)
    seeds = list(range(args.seed, args.seed + args.seeds))
    common = {"latency": latency, "schedule": args.schedule}
    if args.pattern == "ring":
        limit = len(harness._ring_pairs(args.n))
        bad = [d for d in args.d if not 0 <= d <= limit]
        if bad:
            raise UsageError(f"ring({args.n}) supports d in 0..{limit}")
        return [harness.BenchmarkConfig.ring(args.n, d, seeds, **common) for d in args.d]
    if args.pattern == "star":
        if any(k < 1 for k in args.k):
            raise UsageError("star needs k >= 1")
        return [harness.BenchmarkConfig.star(k, args.interactions, seeds, **common) for k in args.k]
    variants = harness.PHILOSOPHER_VARIANTS if args.variant == "both" else [args.variant]
    return [harness.BenchmarkConfig.philosophers(v, args.cycles, seeds, **common) for v in variants]


def cmd_bench(args: argparse.Namespace) -> int:
    configs = _bench_configs(args)
    rows = []
    for cfg in configs:
        try:
            res = harness.sweep(cfg, dump_dir=args.dump_dir)
        except harness.SweepAborted as exc:
            print(f"sweep aborted: {exc}", file=sys.stderr)
            return EXIT_INVALID
        rows.extend(res.rows)
        print(json.dumps(res.summary()), file=sys.stderr)
    if args.csv:
        with open(args.csv, "w") as fh:
            harness.write_csv(rows, fh)
    else:
        sys.stdout.write(harness.write_csv(rows))
    return EXIT_OK


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--latency-ms", type=_positive, default=0.2)
    p.add_argument("--jitter-ms", type=float, default=0.0)
    p.add_argument("--schedule", choices=SCHEDULES, default="fifo")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prioctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    check = sub.add_parser("check", help="static checks on a model file")
    check.add_argument("model")
    check.add_argument("--json", action="store_true")
    check.add_argument("--state-cap", type=int, default=10**6)
    check.set_defaults(func=cmd_check)

    run = sub.add_parser("run", help="simulate one seeded run")
    run.add_argument("model")
    _run_flags(run)
    run.add_argument("--max-interactions", type=int)
    run.add_argument("--max-sim-ms", type=float)
    run.add_argument("--start", choices=("staggered", "simultaneous"))
    run.add_argument("--sync-from", choices=("possible", "both"), default="possible")
    run.add_argument("--no-cyclebreaking", action="store_true")
    run.add_argument("--csv")
    run.add_argument("--trace")
    run.add_argument("--validate", choices=("fast", "exhaustive"), default="fast")
    run.add_argument("--force", action="store_true", help="run despite failed checks")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="seed sweeps over the built-in benchmarks")
    bench.add_argument("pattern", choices=("ring", "star", "philosophers"))
    _run_flags(bench)
    bench.add_argument("--seeds", type=int, default=20)
    bench.add_argument("--n", type=int, default=4)
    bench.add_argument("--d", type=int_range, default=list(range(5)))
    bench.add_argument("--k", type=int_range, default=list(range(1, 6)))
    bench.add_argument("--interactions", type=int, default=100)
    bench.add_argument("--variant", choices=(*harness.PHILOSOPHER_VARIANTS, "both"), default="both")
    bench.add_argument("--cycles", type=int, default=100)
    bench.add_argument("--csv")
    bench.add_argument("--dump-dir", default=".")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except modelfile.ParseError as exc:
        print(f"{args.model}:{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
