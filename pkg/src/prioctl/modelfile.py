"""Text format for systems.

::

    # comment
    process P1 init idle
      idle -a-> busy
      busy -b-> idle
    priority a < b
    negotiator a = P1
    cyclebreaker P1 for a,b,c
    work a = 1.5

Interactions are the labels shared by exactly two processes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import ModelError, ProcessSpec, SystemSpec, priority_cycle

_ID = r"[A-Za-z_][A-Za-z0-9_.'^-]*"
_TRANSITION = re.compile(rf"^(\s+)({_ID})\s+-({_ID})->\s+({_ID})\s*$")
_PROCESS = re.compile(rf"^process\s+({_ID})\s+init\s+({_ID})\s*$")
_PRIORITY = re.compile(rf"^priority\s+({_ID})\s*<\s*({_ID})\s*$")
_NEGOTIATOR = re.compile(rf"^negotiator\s+({_ID})\s*=\s*({_ID})\s*$")
_CYCLEBREAKER = re.compile(rf"^cyclebreaker\s+({_ID})\s+for\s+({_ID}(?:\s*,\s*{_ID})*)\s*$")
_WORK = re.compile(rf"^work\s+({_ID})\s*=\s*(\S+)\s*$")


class ParseError(ModelError):
    def __init__(self, line: int, col: int, msg: str) -> None:
        super().__init__(f"{line}:{col}: {msg}")
        self.line, self.col, self.msg = line, col, msg


@dataclass
class _Proc:
    id: str
    initial: str
    line: int
    transitions: list[tuple[str, str, str]] = field(default_factory=list)
    where: dict[str, tuple[int, int]] = field(default_factory=dict)


@dataclass
class ModelFile:
    """A parsed file before the priority order has been checked."""

    processes: list[ProcessSpec]
    priorities: list[tuple[str, str]]
    negotiators: dict[str, str]
    cyclebreakers: dict[frozenset[str], str]
    work: dict[str, float]

    def priority_cycle(self) -> list[str] | None:
        return priority_cycle(self.priorities)

    def build(self) -> SystemSpec:
        return SystemSpec.compose(
            self.processes, self.priorities, self.negotiators, self.cyclebreakers, self.work
        )


def parse(text: str) -> ModelFile:
    procs: list[_Proc] = []
    current: _Proc | None = None
    priorities: list[tuple[str, str, int, int]] = []
    negotiators: list[tuple[str, str, int, int]] = []
    breakers: list[tuple[str, list[str], int, int]] = []
    work: list[tuple[str, float, int, int]] = []

    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        if line[0].isspace():
            m = _TRANSITION.match(line)
            if m is None:
                raise ParseError(n, col, "expected '<state> -<interaction>-> <state>'")
            if current is None:
                raise ParseError(n, col, "transition outside of a process block")
            src, a, dst = m.group(2), m.group(3), m.group(4)
            current.transitions.append((src, a, dst))
            current.where.setdefault(a, (n, m.start(3)))
            continue
        current = None
        body = line.strip()
        if m := _PROCESS.match(body):
            pid = m.group(1)
            if any(p.id == pid for p in procs):
                raise ParseError(n, m.start(1) + 1, f"duplicate process {pid}")
            current = _Proc(pid, m.group(2), n)
            procs.append(current)
        elif m := _PRIORITY.match(body):
            priorities.append((m.group(1), m.group(2), n, m.start(1) + 1))
        elif m := _NEGOTIATOR.match(body):
            negotiators.append((m.group(1), m.group(2), n, m.start(1) + 1))
        elif m := _CYCLEBREAKER.match(body):
            labels = [s.strip() for s in m.group(2).split(",")]
            breakers.append((m.group(1), labels, n, m.start(1) + 1))
        elif m := _WORK.match(body):
            try:
                ms = float(m.group(2))
            except ValueError:
                raise ParseError(n, m.start(2) + 1, f"bad duration {m.group(2)!r}") from None
            if ms < 0 or ms != ms:
                raise ParseError(n, m.start(2) + 1, "work must be a non-negative number")
            work.append((m.group(1), ms, n, m.start(1) + 1))
        else:
            word = body.split()[0]
            raise ParseError(n, col, f"unexpected {word!r}")

    holders: dict[str, list[_Proc]] = {}
    for p in procs:
        for _, a, _ in p.transitions:
            if p not in holders.setdefault(a, []):
                holders[a].append(p)
    for a, ps in holders.items():
        if len(ps) != 2:
            culprit = ps[2] if len(ps) > 2 else ps[0]
            line, col = culprit.where[a]
            what = "local to" if len(ps) == 1 else "shared by"
            names = ", ".join(p.id for p in ps)
            raise ParseError(
                line, col + 1,
                f"label {a} is {what} {names}; interactions must join exactly two processes",
            )

    def need(a: str, line: int, col: int) -> None:
        if a not in holders:
            raise ParseError(line, col, f"unknown interaction {a}")

    def participants(a: str) -> list[str]:
        return [p.id for p in holders[a]]

    for lo, hi, line, col in priorities:
        need(lo, line, col)
        need(hi, line, col)
        if lo == hi:
            raise ParseError(line, col, f"{lo} < {lo} is not a strict order")
    neg: dict[str, str] = {}
    for a, pid, line, col in negotiators:
        need(a, line, col)
        if pid not in participants(a):
            raise ParseError(line, col, f"negotiator {pid} does not take part in {a}")
        neg[a] = pid
    cb: dict[frozenset[str], str] = {}
    for pid, labels, line, col in breakers:
        if not any(p.id == pid for p in procs):
            raise ParseError(line, col, f"unknown process {pid}")
        for a in labels:
            need(a, line, col)
        if not any(pid in participants(a) for a in labels):
            raise ParseError(line, col, f"cyclebreaker {pid} is not on the cycle")
        cb[frozenset(labels)] = pid
    w: dict[str, float] = {}
    for a, ms, line, col in work:
        need(a, line, col)
        w[a] = ms

    specs = []
    for p in procs:
        try:
            specs.append(ProcessSpec.from_transitions(p.id, p.initial, p.transitions))
        except ModelError as exc:
            raise ParseError(p.line, 1, str(exc)) from None
    return ModelFile(specs, [(lo, hi) for lo, hi, _, _ in priorities], neg, cb, w)


def loads(text: str) -> SystemSpec:
    """Parse and build; a cyclic priority order raises ModelError."""
    return parse(text).build()


def load(path: str) -> SystemSpec:
    with open(path) as fh:
        return loads(fh.read())


def dumps(sys: SystemSpec) -> str:
    out = []
    for p in sys.processes:
        out.append(f"process {p.id} init {p.initial}")
        out.extend(f"  {src} -{a}-> {dst}" for src, a, dst in p.transitions)
    rank = {a: i for i, a in enumerate(sys.order)}
    for lo, hi in sorted(sys.priorities, key=lambda pr: (rank[pr[1]], rank[pr[0]])):
        out.append(f"priority {lo} < {hi}")
    for a in sys.order:
        if a in sys.negotiators:
            out.append(f"negotiator {a} = {sys.negotiators[a]}")
    for labels, pid in sys.cyclebreakers.items():
        out.append(f"cyclebreaker {pid} for {','.join(sorted(labels, key=rank.__getitem__))}")
    for a in sys.order:
        if a in sys.work:
            out.append(f"work {a} = {sys.work[a]!r}")
    return "\n".join(out) + "\n"
