"""Static checks run before execution: order validity, conflicts, confusion,
negotiator assignment and decision-cycle enumeration with Cyclebreaker election.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx

from .model import (
    DEFAULT_STATE_CAP,
    GlobalState,
    ModelError,
    SystemSpec,
    TooLargeError,
    _all_successors,
    enabled,
    globally_ready,
    priority_cycle,
    reachable_states,
    transitive_closure,
)

CONCURRENT = "concurrent"
STRUCTURAL = "structural"
PRIORITIZED = "prioritized"


@dataclass(frozen=True)
class PriorityViolation:
    cycle: tuple[str, ...]


@dataclass(frozen=True)
class ConflictReport:
    pair: tuple[str, str]
    witness: GlobalState
    kind: str


@dataclass(frozen=True)
class ConfusionWitness:
    state: GlobalState
    fired: str
    victim: str
    after: GlobalState
    inhibitors: tuple[str, ...]


@dataclass(frozen=True)
class CycleDescriptor:
    id: str
    interactions: tuple[str, ...]
    processes: tuple[str, ...]
    cyclebreaker: str
    witness: GlobalState | None = None

    @property
    def potential(self) -> bool:
        """True when no reachable state enabling the whole cycle was found."""
        return self.witness is None

    @property
    def key(self) -> frozenset[str]:
        return frozenset(self.interactions)


def check_priority_order(
    priorities: Iterable[tuple[str, str]], interactions: Iterable[str] | None = None
) -> PriorityViolation | None:
    pairs = list(priorities)
    if interactions is not None:
        known = set(interactions)
        for pair in pairs:
            for a in pair:
                if a not in known:
                    raise ModelError(f"priority references unknown interaction {a}")
    cyc = priority_cycle(pairs)
    return None if cyc is None else PriorityViolation(tuple(cyc))


def closure_of(priorities: Iterable[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    return transitive_closure(priorities)


def _kind(sys: SystemSpec, a: str, b: str) -> str:
    if set(sys.participants(a)) & set(sys.participants(b)):
        return STRUCTURAL
    if sys.less(a, b) or sys.less(b, a):
        return PRIORITIZED
    return CONCURRENT


def classify_conflicts(sys: SystemSpec, cap: int = DEFAULT_STATE_CAP) -> list[ConflictReport]:
    seen: dict[tuple[tuple[str, str], str], ConflictReport] = {}
    rank = {a: i for i, a in enumerate(sys.order)}
    for g in reachable_states(sys, cap):
        ready = sorted(globally_ready(sys, g), key=rank.__getitem__)
        for a, b in itertools.combinations(ready, 2):
            kind = _kind(sys, a, b)
            seen.setdefault(((a, b), kind), ConflictReport((a, b), g, kind))
    return list(seen.values())


def detect_confusion(sys: SystemSpec, cap: int = DEFAULT_STATE_CAP) -> list[ConfusionWitness]:
    """Empty list means the system is free of prioritized confusion."""
    if not sys.priorities:
        return []
    out = []
    rank = {a: i for i, a in enumerate(sys.order)}
    for g in reachable_states(sys, cap):
        top = sorted(enabled(sys, g), key=rank.__getitem__)
        for a, b in itertools.permutations(top, 2):
            if set(sys.participants(a)) & set(sys.participants(b)):
                continue
            for h in _all_successors(sys, g, a):
                ready = globally_ready(sys, h)
                if b not in ready:
                    continue
                inhibitors = sys.higher(b) & ready
                if inhibitors:
                    out.append(ConfusionWitness(g, a, b, h, tuple(sorted(inhibitors))))
    return out


def assign_negotiators(
    sys: SystemSpec, overrides: Mapping[str, str] | None = None
) -> dict[str, str]:
    """Negotiator per prioritized interaction: override, else lowest-index participant."""
    overrides = dict(sys.negotiators if overrides is None else overrides)
    for a, pid in overrides.items():
        if a not in sys.interactions:
            raise ModelError(f"negotiator override for unknown interaction {a}")
        if pid not in sys.participants(a):
            raise ModelError(f"negotiator {pid} does not participate in {a}")
    out = {}
    for a in sys.order:
        if a not in sys.prioritized():
            continue
        out[a] = overrides.get(a) or min(sys.participants(a), key=sys.index)
    return out


def _process_cycles(sys: SystemSpec) -> list[list[str]]:
    g = nx.Graph()
    g.add_nodes_from(p.id for p in sys.processes)
    for p, q in sys.interactions.values():
        g.add_edge(p, q)
    cycles = []
    for cyc in nx.chordless_cycles(g):
        if len(cyc) >= 3:
            cycles.append(cyc)
    return cycles


def _canonical(sys: SystemSpec, procs: list[str]) -> list[str]:
    start = min(range(len(procs)), key=lambda i: sys.index(procs[i]))
    rot = procs[start:] + procs[:start]
    rev = [rot[0]] + rot[1:][::-1]
    if len(rot) > 2 and sys.index(rev[1]) < sys.index(rot[1]):
        return rev
    return rot


def enumerate_cycles(
    sys: SystemSpec, cap: int = DEFAULT_STATE_CAP, with_witness: bool = True
) -> list[CycleDescriptor]:
    edges: dict[frozenset[str], list[str]] = {}
    for a in sys.order:
        edges.setdefault(frozenset(sys.participants(a)), []).append(a)

    found: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    for key, labels in edges.items():
        p, q = sorted(key, key=sys.index)
        for a, b in itertools.combinations(labels, 2):
            found.append(((a, b), (p, q)))
    for procs in _process_cycles(sys):
        procs = _canonical(sys, procs)
        hops = [edges[frozenset((procs[i], procs[(i + 1) % len(procs)]))]
                for i in range(len(procs))]
        for choice in itertools.product(*hops):
            found.append((tuple(choice), tuple(procs)))

    states: list[GlobalState] | None = None
    if with_witness and found:
        try:
            states = reachable_states(sys, cap)
        except TooLargeError:
            states = None

    out = []
    for n, (labels, procs) in enumerate(sorted(found, key=lambda c: (len(c[0]), c))):
        witness = None
        if states is not None:
            for g in states:
                if set(labels) <= enabled(sys, g):
                    witness = g
                    break
        breaker = sys.cyclebreakers.get(frozenset(labels)) or min(procs, key=sys.index)
        if breaker not in procs:
            raise ModelError(f"cyclebreaker {breaker} is not on cycle {labels}")
        out.append(CycleDescriptor(f"C{n + 1}", labels, procs, breaker, witness))
    return out


def check_report(sys: SystemSpec, cap: int = DEFAULT_STATE_CAP) -> dict:
    """Everything ``check`` prints, as a JSON-ready dict."""
    violation = check_priority_order(sys.priorities, sys.interactions)
    conflicts = classify_conflicts(sys, cap)
    confusion = detect_confusion(sys, cap)
    cycles = enumerate_cycles(sys, cap)
    summary: dict[str, int] = {CONCURRENT: 0, STRUCTURAL: 0, PRIORITIZED: 0}
    for c in conflicts:
        summary[c.kind] += 1
    return {
        "order_valid": violation is None,
        "order_cycle": list(violation.cycle) if violation else [],
        "conflicts": summary,
        "conflict_pairs": [
            {"pair": list(c.pair), "kind": c.kind, "witness": list(c.witness)}
            for c in conflicts
        ],
        "cycles": [
            {
                "id": c.id,
                "interactions": list(c.interactions),
                "processes": list(c.processes),
                "cyclebreaker": c.cyclebreaker,
                "potential": c.potential,
            }
            for c in cycles
        ],
        "negotiators": assign_negotiators(sys),
        "confusion": [
            {
                "state": list(w.state),
                "fired": w.fired,
                "victim": w.victim,
                "after": list(w.after),
                "inhibitors": list(w.inhibitors),
            }
            for w in confusion
        ],
    }


def render_report(report: dict) -> str:
    lines = []
    if report["order_valid"]:
        lines.append("priority order: ok")
    else:
        cyc = report["order_cycle"]
        lines.append("priority order: CYCLIC " + " < ".join(cyc + cyc[:1]))
    c = report["conflicts"]
    lines.append(
        f"conflicts: {c[CONCURRENT]} concurrent, {c[STRUCTURAL]} structural, "
        f"{c[PRIORITIZED]} prioritized"
    )
    lines.append(f"cycles: {len(report['cycles'])}")
    for cyc in report["cycles"]:
        tag = " (potential)" if cyc["potential"] else ""
        lines.append(
            f"  {cyc['id']}: {','.join(cyc['interactions'])} over "
            f"{','.join(cyc['processes'])} cyclebreaker={cyc['cyclebreaker']}{tag}"
        )
    lines.append("negotiators:")
    for a, pid in report["negotiators"].items():
        lines.append(f"  {a} -> {pid}")
    if report["confusion"]:
        lines.append(f"confusion: {len(report['confusion'])} witness(es)")
        for w in report["confusion"]:
            lines.append(
                f"  in ({','.join(w['state'])}) firing {w['fired']} leaves "
                f"{w['victim']} inhibited by {','.join(w['inhibitors'])} "
                f"in ({','.join(w['after'])})"
            )
    else:
        lines.append("confusion: none")
    return "\n".join(lines)
