"""Processes, their binary composition and the priority-controlled semantics.

Everything here is a pure function over immutable values.  The interpreter
is the reference the distributed protocol is checked against.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

Transition = tuple[str, str, str]
GlobalState = tuple[str, ...]

DEFAULT_STATE_CAP = 10**6
DEFAULT_LINEARIZATION_BOUND = 8


class ModelError(ValueError):
    """A malformed process, system or global state."""


class PreconditionError(ModelError):
    """An operation was applied outside of its precondition."""


class TooLargeError(ModelError):
    """Exhaustive exploration would exceed the configured bound."""


@dataclass(frozen=True)
class ProcessSpec:
    id: str
    states: tuple[str, ...]
    initial: str
    transitions: tuple[Transition, ...]
    alphabet: frozenset[str] = field(default=frozenset())

    def __post_init__(self) -> None:
        labels = frozenset(a for _, a, _ in self.transitions)
        if not self.alphabet:
            object.__setattr__(self, "alphabet", labels)
        elif frozenset(self.alphabet) != labels:
            unused = sorted(set(self.alphabet) - labels)
            undeclared = sorted(labels - set(self.alphabet))
            raise ModelError(
                f"process {self.id}: alphabet mismatch "
                f"(unused {unused}, undeclared {undeclared})"
            )
        states = set(self.states)
        if len(states) != len(self.states):
            raise ModelError(f"process {self.id}: duplicate state")
        if self.initial not in states:
            raise ModelError(f"process {self.id}: initial {self.initial!r} unknown")
        for src, a, dst in self.transitions:
            if src not in states or dst not in states:
                raise ModelError(
                    f"process {self.id}: transition {src} -{a}-> {dst} "
                    "uses an undeclared state"
                )

    @classmethod
    def from_transitions(
        cls, pid: str, initial: str, transitions: Iterable[Transition]
    ) -> ProcessSpec:
        """Build a process whose state set is read off its transitions."""
        transitions = tuple(transitions)
        states: list[str] = [initial]
        for src, _, dst in transitions:
            for q in (src, dst):
                if q not in states:
                    states.append(q)
        return cls(pid, tuple(states), initial, transitions)

    def successors(self, state: str, a: str) -> list[str]:
        return sorted(dst for src, b, dst in self.transitions if src == state and b == a)


def locally_ready(spec: ProcessSpec, state: str) -> frozenset[str]:
    if state not in spec.states:
        raise ModelError(f"process {spec.id}: unknown state {state!r}")
    return frozenset(a for src, a, _ in spec.transitions if src == state)


def transitive_closure(pairs: Iterable[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    succ: dict[str, set[str]] = {}
    for lo, hi in pairs:
        succ.setdefault(lo, set()).add(hi)
    closure = set()
    for start in list(succ):
        seen: set[str] = set()
        stack = list(succ[start])
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(succ.get(x, ()))
        closure.update((start, x) for x in seen)
    return frozenset(closure)


def priority_cycle(pairs: Iterable[tuple[str, str]]) -> list[str] | None:
    """Return one cycle of the pair relation as a list of interactions, or None."""
    succ: dict[str, list[str]] = {}
    for lo, hi in sorted(set(pairs)):
        succ.setdefault(lo, []).append(hi)
        succ.setdefault(hi, [])
    color = dict.fromkeys(succ, 0)
    for root in succ:
        if color[root]:
            continue
        path = [root]
        iters = [iter(succ[root])]
        color[root] = 1
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                iters.pop()
            elif color[nxt] == 1:
                return path[path.index(nxt):]
            elif color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(succ[nxt]))
    return None


@dataclass(frozen=True)
class SystemSpec:
    """A composition of processes with binary interactions and a priority order.

    ``interactions`` maps each interaction to its two participants, ordered by
    process index.  ``cyclebreakers`` is keyed by the frozenset of a cycle's
    interactions.  ``work`` holds per-interaction busy durations in
    simulated milliseconds.
    """

    processes: tuple[ProcessSpec, ...]
    interactions: Mapping[str, tuple[str, str]]
    priorities: frozenset[tuple[str, str]] = frozenset()
    negotiators: Mapping[str, str] = field(default_factory=dict)
    cyclebreakers: Mapping[frozenset[str], str] = field(default_factory=dict)
    work: Mapping[str, float] = field(default_factory=dict)
    order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        ids = [p.id for p in self.processes]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate process id")
        index = {pid: i for i, pid in enumerate(ids)}
        object.__setattr__(self, "_index", index)
        for a, pair in self.interactions.items():
            if len(pair) != 2 or pair[0] == pair[1]:
                raise ModelError(f"interaction {a}: needs two distinct participants")
            for pid in pair:
                if pid not in index:
                    raise ModelError(f"interaction {a}: unknown process {pid}")
            holders = [p.id for p in self.processes if a in p.alphabet]
            if sorted(holders) != sorted(pair):
                raise ModelError(
                    f"interaction {a}: declared on {list(pair)} but found in {holders}"
                )
        for p in self.processes:
            for a in p.alphabet:
                if a not in self.interactions:
                    raise ModelError(
                        f"label {a} of process {p.id} is not a binary interaction"
                    )
        for lo, hi in self.priorities:
            for a in (lo, hi):
                if a not in self.interactions:
                    raise ModelError(f"priority references unknown interaction {a}")
        cyc = priority_cycle(self.priorities)
        if cyc is not None:
            raise ModelError(f"priority order is cyclic: {' < '.join(cyc + cyc[:1])}")
        for a, pid in self.negotiators.items():
            if a not in self.interactions:
                raise ModelError(f"negotiator for unknown interaction {a}")
            if pid not in self.interactions[a]:
                raise ModelError(f"negotiator {pid} does not participate in {a}")
        for cyc_key, pid in self.cyclebreakers.items():
            if pid not in index:
                raise ModelError(f"unknown cyclebreaker {pid}")
        if not self.order:
            object.__setattr__(self, "order", tuple(self.interactions))
        closure = transitive_closure(self.priorities)
        higher: dict[str, frozenset[str]] = {a: frozenset() for a in self.interactions}
        lower: dict[str, frozenset[str]] = {a: frozenset() for a in self.interactions}
        for lo, hi in closure:
            higher[lo] = higher[lo] | {hi}
            lower[hi] = lower[hi] | {lo}
        object.__setattr__(self, "closure", closure)
        object.__setattr__(self, "_higher", higher)
        object.__setattr__(self, "_lower", lower)

    @classmethod
    def compose(
        cls,
        processes: Sequence[ProcessSpec],
        priorities: Iterable[tuple[str, str]] = (),
        negotiators: Mapping[str, str] | None = None,
        cyclebreakers: Mapping[frozenset[str], str] | None = None,
        work: Mapping[str, float] | None = None,
    ) -> SystemSpec:
        """Compose processes; interactions are the labels shared by two of them."""
        holders: dict[str, list[str]] = {}
        order: list[str] = []
        for p in processes:
            for _, a, _ in p.transitions:
                if a not in holders:
                    holders[a] = []
                    order.append(a)
                if p.id not in holders[a]:
                    holders[a].append(p.id)
        for a, pids in holders.items():
            if len(pids) != 2:
                raise ModelError(
                    f"label {a} occurs in {len(pids)} process(es) {pids}; "
                    "interactions must be binary"
                )
        return cls(
            processes=tuple(processes),
            interactions={a: (holders[a][0], holders[a][1]) for a in order},
            priorities=frozenset(priorities),
            negotiators=dict(negotiators or {}),
            cyclebreakers=dict(cyclebreakers or {}),
            work=dict(work or {}),
            order=tuple(order),
        )

    # lookups -------------------------------------------------------------

    def index(self, pid: str) -> int:
        return self._index[pid]  # type: ignore[attr-defined]

    def process(self, pid: str) -> ProcessSpec:
        return self.processes[self.index(pid)]

    def participants(self, a: str) -> tuple[str, str]:
        return self.interactions[a]

    def peer(self, a: str, pid: str) -> str:
        p, q = self.interactions[a]
        if pid == p:
            return q
        if pid == q:
            return p
        raise ModelError(f"{pid} does not participate in {a}")

    def higher(self, a: str) -> frozenset[str]:
        """Interactions that dominate ``a`` under the transitive closure."""
        return self._higher[a]  # type: ignore[attr-defined]

    def lower(self, a: str) -> frozenset[str]:
        return self._lower[a]  # type: ignore[attr-defined]

    def less(self, a: str, b: str) -> bool:
        return (a, b) in self.closure  # type: ignore[attr-defined]

    def prioritized(self) -> frozenset[str]:
        return frozenset(x for pair in self.priorities for x in pair)

    def initial_state(self) -> GlobalState:
        return tuple(p.initial for p in self.processes)

    def check_state(self, g: Sequence[str]) -> None:
        if len(g) != len(self.processes):
            raise ModelError(
                f"global state has {len(g)} components, expected {len(self.processes)}"
            )
        for p, q in zip(self.processes, g):
            if q not in p.states:
                raise ModelError(f"process {p.id}: unknown state {q!r}")


def globally_ready(sys: SystemSpec, g: GlobalState) -> frozenset[str]:
    sys.check_state(g)
    local = [locally_ready(p, q) for p, q in zip(sys.processes, g)]
    out = set()
    for a, (p, q) in sys.interactions.items():
        if a in local[sys.index(p)] and a in local[sys.index(q)]:
            out.add(a)
    return frozenset(out)


def enabled(sys: SystemSpec, g: GlobalState) -> frozenset[str]:
    ready = globally_ready(sys, g)
    return frozenset(a for a in ready if not (sys.higher(a) & ready))


def step(sys: SystemSpec, g: GlobalState, a: str) -> GlobalState:
    if a not in globally_ready(sys, g):
        raise PreconditionError(f"{a} is not globally ready in {g}")
    nxt = list(g)
    for pid in sys.participants(a):
        i = sys.index(pid)
        nxt[i] = sys.processes[i].successors(g[i], a)[0]
    return tuple(nxt)


def reachable_states(sys: SystemSpec, cap: int = DEFAULT_STATE_CAP) -> list[GlobalState]:
    """Breadth-first reachable global states under the uncontrolled semantics."""
    g0 = sys.initial_state()
    seen = {g0}
    out = [g0]
    todo = deque([g0])
    while todo:
        g = todo.popleft()
        for a in sorted(globally_ready(sys, g)):
            for h in _all_successors(sys, g, a):
                if h not in seen:
                    if len(seen) >= cap:
                        raise TooLargeError(f"more than {cap} reachable states")
                    seen.add(h)
                    out.append(h)
                    todo.append(h)
    return out


def _all_successors(sys: SystemSpec, g: GlobalState, a: str) -> Iterator[GlobalState]:
    p, q = sys.participants(a)
    i, j = sys.index(p), sys.index(q)
    for si in sys.processes[i].successors(g[i], a):
        for sj in sys.processes[j].successors(g[j], a):
            h = list(g)
            h[i], h[j] = si, sj
            yield tuple(h)


@dataclass(frozen=True)
class TraceViolation:
    index: int
    interaction: str
    reason: str  # "not-globally-ready" | "priority-inhibited"
    state: GlobalState
    inhibitors: tuple[str, ...] = ()


def validate_trace(
    sys: SystemSpec, g0: GlobalState, trace: Sequence[str]
) -> TraceViolation | None:
    """Replay ``trace`` under the controlled semantics; None means it is valid."""
    g = tuple(g0)
    for i, a in enumerate(trace):
        ready = globally_ready(sys, g)
        if a not in ready:
            return TraceViolation(i, a, "not-globally-ready", g)
        blockers = sys.higher(a) & ready
        if blockers:
            return TraceViolation(i, a, "priority-inhibited", g, tuple(sorted(blockers)))
        g = step(sys, g, a)
    return None


def linearizations(
    sys: SystemSpec, per_process: Mapping[str, Sequence[str]]
) -> Iterator[list[str]]:
    """Every interleaving consistent with the per-process commit orders."""
    # occurrence k of interaction a is the event (a, k); both participants
    # must list it at the same relative position among their a-commits
    seqs: dict[str, list[tuple[str, int]]] = {}
    for pid in (p.id for p in sys.processes):
        seen: dict[str, int] = {}
        seq = []
        for a in per_process.get(pid, ()):
            k = seen.get(a, 0)
            seen[a] = k + 1
            seq.append((a, k))
        seqs[pid] = seq
    events: set[tuple[str, int]] = set()
    for pid, seq in seqs.items():
        for ev in seq:
            other = sys.peer(ev[0], pid)
            if ev not in seqs[other]:
                raise ModelError(f"{pid} committed {ev[0]} but {other} did not")
            events.add(ev)
    pos = dict.fromkeys(seqs, 0)
    out: list[str] = []

    def rec() -> Iterator[list[str]]:
        if len(out) == len(events):
            yield list(out)
            return
        tried = set()
        for pid in seqs:
            if pos[pid] >= len(seqs[pid]):
                continue
            ev = seqs[pid][pos[pid]]
            if ev in tried:
                continue
            tried.add(ev)
            other = sys.peer(ev[0], pid)
            if pos[other] >= len(seqs[other]) or seqs[other][pos[other]] != ev:
                continue
            pos[pid] += 1
            pos[other] += 1
            out.append(ev[0])
            yield from rec()
            out.pop()
            pos[pid] -= 1
            pos[other] -= 1

    yield from rec()


def all_linearizations_valid(
    sys: SystemSpec,
    per_process: Mapping[str, Sequence[str]],
    bound: int = DEFAULT_LINEARIZATION_BOUND,
) -> list[str] | None:
    """Check every linear extension; returns a failing one, or None if all pass."""
    total = sum(len(s) for s in per_process.values()) // 2
    if total > bound:
        raise TooLargeError(
            f"{total} committed interactions exceed the exhaustive bound {bound}"
        )
    g0 = sys.initial_state()
    for lin in linearizations(sys, per_process):
        if validate_trace(sys, g0, lin) is not None:
            return lin
    return None
