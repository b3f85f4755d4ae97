"""Benchmark systems, seeded runs, metrics and run validation."""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .analysis import assign_negotiators, enumerate_cycles
from .model import (
    GlobalState,
    ModelError,
    ProcessSpec,
    SystemSpec,
    TooLargeError,
    TraceViolation,
    all_linearizations_valid,
    globally_ready,
    validate_trace,
)
from .netsim import ExecutionTrace, LatencyModel, Simulator
from .protocol import CommitRecord, Controller

CSV_HEADER = (
    "config", "seed", "d_or_k", "interactions", "messages",
    "msg_count", "sync_ms", "select_ms", "response_ms", "validated",
)

def _ring_pairs(n: int) -> list[tuple[str, str]]:
    """(lower, higher) pairs in the order the ring families add them."""
    pairs = []
    for hi in range(1, n + 1):
        for lo in range(hi + 1, n + 1):
            pairs.append((f"a{lo}", f"a{hi}"))
    return pairs


# builders --------------------------------------------------------------------

def _loop(pid: str, labels: Iterable[str]) -> ProcessSpec:
    return ProcessSpec.from_transitions(pid, "s", [("s", a, "s") for a in labels])


def ring(n: int = 4, d: int = 0) -> SystemSpec:
    """n one-state processes; a_i joins P_i and P_{i+1 mod n}; d priority pairs."""
    if n < 3:
        raise ModelError("ring needs n >= 3")
    pairs = _ring_pairs(n)
    if not 0 <= d <= len(pairs):
        raise ModelError(f"ring({n}) supports d in 0..{len(pairs)}, got {d}")
    procs = [_loop(f"P{i}", [f"a{(i - 2) % n + 1}", f"a{i}"]) for i in range(1, n + 1)]
    negotiators = {"a1": "P2"} if d else {}
    return SystemSpec.compose(procs, pairs[:d], negotiators=negotiators)


def star(k: int = 1) -> SystemSpec:
    """Leaves P1..Pk and hub P{k+1}; a_i joins P_i and the hub."""
    if k < 1:
        raise ModelError("star needs k >= 1")
    labels = [f"a{i}" for i in range(1, k + 1)]
    procs = [_loop(f"P{i}", [a]) for i, a in enumerate(labels, 1)]
    procs.append(_loop(f"P{k + 1}", labels))
    return SystemSpec.compose(procs)


PHILOSOPHER_VARIANTS = ("priorities", "separate-forks")


def philosophers(variant: str = "priorities", work: float = 1.0) -> SystemSpec:
    """Two philosophers alpha and beta.

    ``priorities``: one Forks process holds forks X and Y.  Alpha picks X
    then Y, beta picks Y then X; taking the second fork covers eating,
    thinking and putting both forks back.  Without priorities the state
    where each holds one fork deadlocks.

    ``separate-forks``: processes F1 and F2, both philosophers take F1
    first, then F2 (which also covers thinking and giving F2 back), then
    hand F1 back.
    """
    if variant == "priorities":
        phil = {
            who: ProcessSpec.from_transitions(
                who, "t",
                [("t", f"fork1_{who}", "h"), ("h", f"fork2_{who}", "t")],
            )
            for who in ("alpha", "beta")
        }
        # alpha_x: alpha holds X; beta_y: beta holds Y; split: each holds one
        forks = ProcessSpec.from_transitions(
            "Forks", "free",
            [
                ("free", "fork1_alpha", "alpha_x"),
                ("free", "fork1_beta", "beta_y"),
                ("alpha_x", "fork2_alpha", "free"),
                ("beta_y", "fork2_beta", "free"),
                ("alpha_x", "fork1_beta", "split"),
                ("beta_y", "fork1_alpha", "split"),
            ],
        )
        prio = [("fork1_alpha", "fork2_beta"), ("fork1_beta", "fork2_alpha")]
        labels = ["fork1_alpha", "fork2_alpha", "fork1_beta", "fork2_beta"]
        return SystemSpec.compose(
            [phil["alpha"], phil["beta"], forks],
            prio,
            negotiators={a: "Forks" for a in labels},
            work={a: work for a in labels},
        )
    if variant == "separate-forks":
        procs = []
        labels = []
        for who in ("alpha", "beta"):
            steps = [f"take1_{who}", f"take2_{who}", f"release1_{who}"]
            labels += steps
            procs.append(ProcessSpec.from_transitions(
                who, "t", [("t", steps[0], "h1"), ("h1", steps[1], "h2"), ("h2", steps[2], "t")]
            ))
        f1 = ProcessSpec.from_transitions(
            "F1", "free",
            [t for who in ("alpha", "beta") for t in (
                ("free", f"take1_{who}", who), (who, f"release1_{who}", "free"))],
        )
        f2 = _loop("F2", ["take2_alpha", "take2_beta"])
        return SystemSpec.compose(procs + [f1, f2], work={a: work for a in labels})
    raise ModelError(f"unknown philosophers variant {variant!r}")


def cycle_ends(sys: SystemSpec) -> frozenset[str]:
    """Interactions that complete a philosopher cycle (return it to its initial state)."""
    out = set()
    for p in sys.processes:
        if p.id in ("alpha", "beta"):
            out |= {a for src, a, dst in p.transitions if dst == p.initial}
    return frozenset(out)


def triangle() -> SystemSpec:
    """Three processes in a triangle of interactions a, b, c."""
    return SystemSpec.compose([
        _loop("P1", ["a", "c"]),
        _loop("P2", ["a", "b"]),
        _loop("P3", ["b", "c"]),
    ])


# runs ------------------------------------------------------------------------

class Attribution:
    """Assigns every message to the decision round of one interaction occurrence.

    A message about ``a`` sent by ``p`` belongs to occurrence ``k`` where
    ``k`` is how often ``p`` has committed ``a`` so far.  A READY query about
    ``a`` belongs to the next occurrence of ``a`` system-wide, and its answer
    goes with the query.  Records are consumed incrementally.
    """

    def __init__(self, trace: ExecutionTrace) -> None:
        self.trace = trace
        self.pos = 0
        self.commits: dict[tuple[str, str], int] = {}
        self.started: dict[str, int] = {}
        self.queries: dict[tuple[str, str], tuple[str, int]] = {}
        self.count: dict[tuple[str, int], int] = {}
        self.open: dict[tuple[str, int], int] = {}
        self.sent: list[tuple[str, tuple[str, int]]] = []

    def update(self) -> None:
        records = self.trace.records
        while self.pos < len(records):
            r = records[self.pos]
            self.pos += 1
            if r.event == "commit":
                k = self.commits.get((r.src, r.interaction), 0)
                self.commits[(r.src, r.interaction)] = k + 1
                self.started[r.interaction] = max(self.started.get(r.interaction, 0), k + 1)
            elif r.event == "send":
                self._send(r)

    def _send(self, r) -> None:
        a = r.interaction
        if r.info.startswith("q"):
            key = (a, self.started.get(a, 0))
            self.queries[(r.src, r.info[1:])] = key
            self.open[key] = self.open.get(key, 0) + 1
        elif r.info.startswith("a"):
            key = self.queries.pop((r.dst, r.info[1:]))
            self.open[key] -= 1
        else:
            key = (a, self.commits.get((r.src, a), 0))
        self.count[key] = self.count.get(key, 0) + 1
        self.sent.append((r.kind, key))

    def messages(self, a: str, k: int) -> int:
        self.update()
        return self.count.get((a, k), 0)

    def settled(self, a: str, k: int) -> bool:
        self.update()
        return self.open.get((a, k), 0) == 0

@dataclass
class Execution:
    """One occurrence of an interaction, recorded at its first commit."""

    interaction: str
    occurrence: int
    time: float
    participants: tuple[str, str]
    possible_since: float
    both_possible: float
    ready_at: float
    done_at: float
    completed: bool = False
    counted: bool = True


@dataclass
class RunResult:
    sys: SystemSpec
    sim: Simulator
    controllers: dict[str, Controller]
    executions: list[Execution]
    outcome: str  # stop | time | quiescent | deadlock
    seed: int
    schedule: str
    attribution: Attribution | None = None

    @property
    def trace(self) -> ExecutionTrace:
        return self.sim.trace

    @property
    def deadlock(self) -> bool:
        return self.outcome == "deadlock"

    def final_state(self) -> GlobalState:
        return tuple(self.controllers[p.id].state for p in self.sys.processes)

    def per_process(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {p.id: [] for p in self.sys.processes}
        for ex in self.executions:
            for pid in ex.participants:
                out[pid].append(ex.interaction)
        return out

    def sequence(self) -> list[str]:
        return [ex.interaction for ex in self.executions]


def run_simulation(
    sys: SystemSpec,
    seed: int = 0,
    latency: LatencyModel | None = None,
    schedule: str = "fifo",
    max_interactions: int | None = None,
    max_sim_ms: float | None = None,
    start: str | None = None,
    cyclebreaking: bool = True,
    stop_after: frozenset[str] | None = None,
    settle: bool = False,
) -> RunResult:
    """Run the protocol on ``sys`` until a stop condition, quiescence or the time bound.

    ``start`` is ``"staggered"`` (process i enters Ready at i times the mean
    latency) or ``"simultaneous"``; by default only the adversarial schedule
    starts everyone at once.  ``stop_after`` restricts which interactions
    count toward ``max_interactions``.  With ``settle`` the run goes on after
    the stop condition until the decision rounds of the counted executions
    are over: both COMMITs delivered and every READY query about them
    answered.
    """
    sim = Simulator(latency, schedule, seed)
    if start is None:
        start = "simultaneous" if schedule == "adversarial" else "staggered"
    if start not in ("staggered", "simultaneous"):
        raise ValueError(f"unknown start policy {start!r}")
    negotiators = assign_negotiators(sys)
    cycles = enumerate_cycles(sys, with_witness=False)
    executions: list[Execution] = []
    open_: dict[tuple[str, int], Execution] = {}
    counts: dict[tuple[str, str], int] = {}
    controllers: dict[str, Controller] = {}
    counted = [0]
    limit = max_interactions if max_interactions is not None else float("inf")
    attribution = Attribution(sim.trace)

    def notify(ctl: Controller, rec: CommitRecord) -> None:
        k = counts.get((ctl.pid, rec.interaction), 0)
        counts[(ctl.pid, rec.interaction)] = k + 1
        key = (rec.interaction, k)
        ex = open_.pop(key, None)
        if ex is not None:
            ex.done_at = max(ex.done_at, rec.done_at)
            ex.completed = True
            return
        other = controllers[sys.peer(rec.interaction, ctl.pid)]
        starts = [rec.phase_start, other.phase_start]
        readies = [t for t in (rec.ready_at, other.ready_at.get(rec.interaction)) if t is not None]
        ex = Execution(
            rec.interaction, k, rec.time, sys.participants(rec.interaction),
            min(starts), max(starts), min(readies) if readies else rec.time, rec.done_at,
        )
        open_[key] = ex
        executions.append(ex)
        ex.counted = counted[0] < limit and (stop_after is None or rec.interaction in stop_after)
        if ex.counted:
            counted[0] += 1

    for p in sys.processes:
        controllers[p.id] = Controller(
            sys, p.id, sim, negotiators, cycles, notify, cyclebreaking=cyclebreaking
        )
    gap = sim.latency.mean if start == "staggered" else 0.0
    for i, p in enumerate(sys.processes):
        sim.at(i * gap, controllers[p.id].start)

    stop = None
    if max_interactions is not None:
        stop = lambda: counted[0] >= max_interactions
    outcome = sim.run(stop, max_sim_ms)
    if settle and outcome == "stop":
        def settled() -> bool:
            return all(
                ex.completed and attribution.settled(ex.interaction, ex.occurrence)
                for ex in executions if ex.counted
            )
        outcome = sim.run(settled, max_sim_ms)
    result = RunResult(sys, sim, controllers, executions, outcome, seed, schedule, attribution)
    if outcome == "quiescent" and globally_ready(sys, result.final_state()):
        result.outcome = "deadlock"
        sim.log("deadlock", info=",".join(result.final_state()))
    return result


# metrics ----------------------------------------------------------------------

@dataclass
class Sample:
    interaction: str
    messages: int
    sync_ms: float
    select_ms: float
    response_ms: float


@dataclass
class MetricsReport:
    messages: int
    by_kind: dict[str, int]
    executed: int
    duration_ms: float
    msg_count: float
    samples: list[Sample] = field(default_factory=list)
    per_cycle: float | None = None

    def _mean(self, attr: str) -> float:
        return statistics.fmean(getattr(s, attr) for s in self.samples) if self.samples else 0.0

    @property
    def sync_ms(self) -> float:
        return self._mean("sync_ms")

    @property
    def select_ms(self) -> float:
        return self._mean("select_ms")

    @property
    def response_ms(self) -> float:
        return self._mean("response_ms")

    def to_dict(self) -> dict:
        out = {
            "messages": self.messages,
            "by_kind": dict(self.by_kind),
            "executed": self.executed,
            "duration_ms": self.duration_ms,
            "msg_count": self.msg_count,
            "sync_ms": self.sync_ms,
            "select_ms": self.select_ms,
            "response_ms": self.response_ms,
        }
        if self.per_cycle is not None:
            out["msg_per_cycle"] = self.per_cycle
        return out

    def render(self) -> str:
        kinds = " ".join(f"{k}={v}" for k, v in sorted(self.by_kind.items()))
        lines = [
            f"executed: {self.executed}",
            f"messages: {self.messages} ({kinds})",
            f"message-count: {self.msg_count:.4f}",
            f"sync-time: {self.sync_ms:.4f} ms",
            f"selection-time: {self.select_ms:.4f} ms",
            f"response-time: {self.response_ms:.4f} ms",
            f"simulated duration: {self.duration_ms:.4f} ms",
        ]
        if self.per_cycle is not None:
            lines.append(f"messages per philosopher cycle: {self.per_cycle:.4f}")
        return "\n".join(lines)


def measure(
    result: RunResult,
    sync_from: str = "possible",
    cycles: frozenset[str] | None = None,
    scope: str = "run",
) -> MetricsReport:
    """Metrics for one run.

    ``scope="run"`` counts every message sent and every execution.
    ``scope="rounds"`` restricts both to the executions that met the stop
    condition, counting only the messages of their decision rounds (see
    :class:`Attribution`).

    Sync-time starts when the interaction first became locally ready at
    either participant (``sync_from="possible"``) or at both (``"both"``).
    With ``cycles`` the report also gives the steady-state number of
    messages per completed cycle: messages sent between the first and the
    last cycle-ending commit, divided by the cycles completed in between.
    """
    if sync_from not in ("possible", "both"):
        raise ValueError(f"unknown sync start {sync_from!r}")
    if scope not in ("run", "rounds"):
        raise ValueError(f"unknown scope {scope!r}")
    attribution = result.attribution or Attribution(result.trace)
    attribution.update()
    sends = result.trace.of("send")
    chosen = [ex for ex in result.executions if scope == "run" or ex.counted]
    samples = []
    for ex in chosen:
        origin = ex.possible_since if sync_from == "possible" else ex.both_possible
        sync = max(ex.ready_at - origin, 0.0)
        select = ex.done_at - ex.ready_at
        msgs = attribution.messages(ex.interaction, ex.occurrence)
        samples.append(Sample(ex.interaction, msgs, sync, select, sync + select))
    by_kind: dict[str, int] = {}
    if scope == "run":
        for r in sends:
            by_kind[r.kind] = by_kind.get(r.kind, 0) + 1
        total = len(sends)
    else:
        keys = {(ex.interaction, ex.occurrence) for ex in chosen}
        total = sum(s.messages for s in samples)
        for kind, key in attribution.sent:
            if key in keys:
                by_kind[kind] = by_kind.get(kind, 0) + 1
    per_cycle = None
    if cycles:
        ends = [ex.time for ex in result.executions if ex.interaction in cycles]
        if len(ends) >= 2:
            lo, hi = ends[0], ends[-1]
            inside = sum(1 for r in sends if lo < r.time <= hi)
            per_cycle = inside / (len(ends) - 1)
    executed = len(chosen)
    return MetricsReport(
        messages=total,
        by_kind=by_kind,
        executed=executed,
        duration_ms=result.sim.now,
        msg_count=total / executed if executed else 0.0,
        samples=samples,
        per_cycle=per_cycle,
    )


# validation -------------------------------------------------------------------

@dataclass
class Verdict:
    fifo: bool
    no_duplication: bool
    violation: TraceViolation | None
    exhaustive: str  # "pass" | "fail" | "skipped"
    counterexample: list[str] | None = None
    deadlock: str = "none"  # none | reference | protocol

    @property
    def ok(self) -> bool:
        return (
            self.fifo
            and self.no_duplication
            and self.violation is None
            and self.exhaustive != "fail"
            and self.deadlock != "protocol"
        )

    def describe(self) -> str:
        if self.ok:
            return "valid"
        parts = []
        if not self.fifo:
            parts.append("FIFO order broken")
        if not self.no_duplication:
            parts.append("message duplication")
        if self.violation is not None:
            v = self.violation
            parts.append(f"{v.reason} at index {v.index} ({v.interaction})")
        if self.exhaustive == "fail":
            parts.append(f"bad linearization {self.counterexample}")
        if self.deadlock == "protocol":
            parts.append("protocol deadlock where the reference semantics can move")
        return "; ".join(parts)


def validate_run(result: RunResult, exhaustive: bool | None = None, bound: int = 8) -> Verdict:
    """Check a run against the reference semantics.

    ``exhaustive=None`` checks every linearization when the run has at most
    ``bound`` commits; True forces it (raising TooLargeError above the bound).
    """
    sys = result.sys
    quiescent = result.outcome in ("quiescent", "deadlock")
    violation = validate_trace(sys, sys.initial_state(), result.sequence())
    mode = "skipped"
    counterexample = None
    if exhaustive or (exhaustive is None and len(result.executions) <= bound):
        try:
            counterexample = all_linearizations_valid(sys, result.per_process(), bound)
            mode = "fail" if counterexample else "pass"
        except TooLargeError:
            if exhaustive:
                raise
    deadlock = "none"
    if result.outcome == "deadlock":
        # globally ready interactions exist, so the reference can still move
        deadlock = "protocol"
    elif result.outcome == "quiescent":
        deadlock = "reference"
    return Verdict(
        fifo=result.trace.check_fifo(),
        no_duplication=result.trace.check_no_duplication(quiescent),
        violation=violation,
        exhaustive=mode,
        counterexample=counterexample,
        deadlock=deadlock,
    )


# sweeps --------------------------------------------------------------------------

class SweepAborted(RuntimeError):
    def __init__(self, config: str, seed: int, reason: str, trace_path: str | None):
        super().__init__(f"{config} seed {seed}: {reason} (trace: {trace_path})")
        self.config, self.seed, self.reason, self.trace_path = config, seed, reason, trace_path


@dataclass
class BenchmarkConfig:
    pattern: str  # ring | star | philosophers | triangle
    n: int = 4
    d: int = 0
    k: int = 1
    variant: str = "priorities"
    seeds: Sequence[int] = (0,)
    latency: LatencyModel = field(default_factory=LatencyModel)
    schedule: str = "fifo"
    max_interactions: int | None = None
    max_sim_ms: float | None = None
    start: str | None = None
    cyclebreaking: bool = True
    settle: bool = False
    scope: str = "run"

    @classmethod
    def ring(cls, n: int = 4, d: int = 0, seeds: Sequence[int] = range(20), **kw) -> BenchmarkConfig:
        """Everyone starts at once; the messages of the first decision round are counted."""
        kw.setdefault("start", "simultaneous")
        return cls("ring", n=n, d=d, seeds=seeds, max_interactions=1,
                   settle=True, scope="rounds", **kw)

    @classmethod
    def star(cls, k: int = 1, interactions: int = 100, seeds: Sequence[int] = (0,), **kw) -> BenchmarkConfig:
        return cls("star", k=k, seeds=seeds, max_interactions=interactions, **kw)

    @classmethod
    def philosophers(cls, variant: str = "priorities", cycles: int = 100,
                     seeds: Sequence[int] = (0,), **kw) -> BenchmarkConfig:
        kw.setdefault("max_sim_ms", 100000.0)
        return cls("philosophers", variant=variant, seeds=seeds, max_interactions=cycles, **kw)

    @property
    def name(self) -> str:
        if self.pattern == "ring":
            return f"ring{self.n}_d{self.d}"
        if self.pattern == "star":
            return f"star_k{self.k}"
        if self.pattern == "philosophers":
            return f"philosophers_{self.variant}"
        return self.pattern

    @property
    def param(self) -> int:
        return self.d if self.pattern == "ring" else self.k

    def build(self) -> SystemSpec:
        return build_benchmark(self)


def build_benchmark(cfg: BenchmarkConfig) -> SystemSpec:
    if cfg.pattern == "ring":
        return ring(cfg.n, cfg.d)
    if cfg.pattern == "star":
        return star(cfg.k)
    if cfg.pattern == "philosophers":
        return philosophers(cfg.variant)
    if cfg.pattern == "triangle":
        return triangle()
    raise ModelError(f"unknown benchmark pattern {cfg.pattern!r}")


@dataclass
class SweepResult:
    config: BenchmarkConfig
    runs: list[RunResult]
    reports: list[MetricsReport]
    verdicts: list[Verdict]
    rows: list[dict]

    def mean(self, metric: str) -> float:
        return statistics.fmean(getattr(r, metric) for r in self.reports)

    def summary(self) -> dict:
        out = {"config": self.config.name, "runs": len(self.runs)}
        for metric in ("msg_count", "sync_ms", "select_ms", "response_ms"):
            values = [getattr(r, metric) for r in self.reports]
            out[metric] = {"mean": statistics.fmean(values), "min": min(values), "max": max(values)}
        cyc = [r.per_cycle for r in self.reports if r.per_cycle is not None]
        if cyc:
            out["msg_per_cycle"] = {"mean": statistics.fmean(cyc), "min": min(cyc), "max": max(cyc)}
        return out


def sweep(cfg: BenchmarkConfig, dump_dir: str | None = None) -> SweepResult:
    """Run and validate every seed; a failing run aborts with its trace dumped."""
    if not cfg.seeds:
        raise ValueError("sweep needs at least one seed")
    sys = build_benchmark(cfg)
    ends = cycle_ends(sys) if cfg.pattern == "philosophers" else None
    runs, reports, verdicts, rows = [], [], [], []
    for seed in cfg.seeds:
        res = run_simulation(
            sys, seed, cfg.latency, cfg.schedule, cfg.max_interactions,
            cfg.max_sim_ms, cfg.start, cfg.cyclebreaking, stop_after=ends, settle=cfg.settle,
        )
        verdict = validate_run(res)
        report = measure(res, cycles=ends, scope=cfg.scope)
        if not verdict.ok:
            path = None
            if dump_dir is not None:
                path = f"{dump_dir}/{cfg.name}_seed{seed}.trace.jsonl"
                res.trace.dump(path)
            raise SweepAborted(cfg.name, seed, verdict.describe(), path)
        runs.append(res)
        reports.append(report)
        verdicts.append(verdict)
        rows.append(csv_row(cfg.name, seed, cfg.param, report, verdict))
    return SweepResult(cfg, runs, reports, verdicts, rows)


def csv_row(config: str, seed: int, param: int, report: MetricsReport, verdict: Verdict) -> dict:
    """One CSV row; for cyclic workloads msg_count is messages per completed cycle."""
    return {
        "config": config,
        "seed": seed,
        "d_or_k": param,
        "interactions": report.executed,
        "messages": report.messages,
        "msg_count": f"{report.per_cycle if report.per_cycle is not None else report.msg_count:.6g}",
        "sync_ms": f"{report.sync_ms:.6g}",
        "select_ms": f"{report.select_ms:.6g}",
        "response_ms": f"{report.response_ms:.6g}",
        "validated": "yes" if verdict.ok else "no",
    }


def write_csv(rows: Iterable[dict], fh: io.TextIOBase | None = None) -> str:
    buf = fh if fh is not None else io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue() if fh is None else ""


def star_accounting(result: RunResult) -> dict[str, int]:
    """Terms of the star message law, read off the per-kind send counters.

    Every executed interaction consumes one offer and two COMMITs; every
    refusal consumes one offer, one COMMIT and one REFUSE.  Offers that led
    to neither are pending.  When both sides offer and commit at once the
    second offer stands in for the missing reply, so the law still holds.
    """
    kinds = result.trace.sent_by_kind()
    executed = len(result.executions)
    refused = kinds.get("REFUSE", 0)
    return {
        "total": sum(kinds.values()),
        "executed": executed,
        "refused": refused,
        "pending": kinds.get("POSSIBLE", 0) - executed - refused,
        "possible": kinds.get("POSSIBLE", 0),
        "commit": kinds.get("COMMIT", 0),
        "other": sum(v for k, v in kinds.items() if k not in ("POSSIBLE", "COMMIT", "REFUSE")),
    }


def star_law_holds(result: RunResult) -> bool:
    a = star_accounting(result)
    return a["pending"] >= 0 and a["total"] == 3 * a["executed"] + 3 * a["refused"] + a["pending"]


def dump_json(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
