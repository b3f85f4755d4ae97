"""Per-process controller for distributed execution with binary interactions
and priorities.

Each controller is one event-driven state machine.  The Main,
Negotiate, WaitingForCommit, TryToCommit and AnswerNegotiators activities
are multiplexed inside it and share its private sets; controllers only
affect each other through messages carried by :class:`~prioctl.netsim.Simulator`.

Offers are remembered: a peer's ``POSSIBLE(a)`` stays known until the
interaction commits or the peer refuses / reports ``NOTPOSSIBLE``, so a
controller that re-enters ``Ready`` does not re-announce what its peer
already knows.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .model import SystemSpec, locally_ready

if TYPE_CHECKING:
    from .analysis import CycleDescriptor
    from .netsim import Simulator


class ProtocolFault(RuntimeError):
    """A message that no correct peer could have sent."""


class MessageKind(enum.Enum):
    POSSIBLE = "POSSIBLE"
    NOTPOSSIBLE = "NOTPOSSIBLE"
    READY = "READY"
    NOTREADY = "NOTREADY"
    COMMIT = "COMMIT"
    REFUSE = "REFUSE"


POSSIBLE = MessageKind.POSSIBLE
NOTPOSSIBLE = MessageKind.NOTPOSSIBLE
READY = MessageKind.READY
NOTREADY = MessageKind.NOTREADY
COMMIT = MessageKind.COMMIT
REFUSE = MessageKind.REFUSE


@dataclass
class Message:
    kind: MessageKind
    interaction: str
    src: str
    dst: str
    seq: int = -1
    # READY/NOTREADY: query id, echoed by the answer
    ref: int = -1
    reply: bool = False
    # commits the sender had made with the receiver when sending
    epoch: int = 0
    # POSSIBLE: sender's phase; COMMIT request: the receiver phase it relies on
    phase: int = -1
    # commit counts per process the sender knew of, its own included
    clock: dict[str, int] = field(default_factory=dict)

    def __str__(self) -> str:
        return f"{self.kind.name}({self.interaction}) {self.src}->{self.dst}"

    @property
    def note(self) -> str:
        """Trace tag pairing a READY query with its answer."""
        if self.ref < 0:
            return ""
        return f"{'a' if self.reply else 'q'}{self.ref}"


@dataclass
class Negotiation:
    interaction: str
    pending: set[str]
    outcome: bool | None = None
    # clock carried by each remote NOTREADY, to spot answers overtaken by a commit
    answers: dict[str, dict[str, int]] = field(default_factory=dict)


@dataclass
class CommitRecord:
    """What one controller knows about one of its commits."""

    interaction: str
    time: float
    phase_start: float
    ready_at: float | None
    done_at: float
    initiator: bool


@dataclass
class Controller:
    sys: SystemSpec
    pid: str
    sim: Simulator
    negotiators: dict[str, str]
    cycles: list[CycleDescriptor]
    notify: Callable[[Controller, CommitRecord], None]
    cyclebreaking: bool = True

    state: str = ""
    mode: str = "idle"  # idle | ready | busy
    phase: int = 0
    phase_start: float = 0.0
    possible: list[str] = field(default_factory=list)
    known: dict[str, int] = field(default_factory=dict)
    known_phase: dict[str, int] = field(default_factory=dict)
    offered: set[str] = field(default_factory=set)
    not_ready: set[str] = field(default_factory=set)
    ready_set: set[str] = field(default_factory=set)
    ready_at: dict[str, float] = field(default_factory=dict)
    negotiations: dict[str, Negotiation] = field(default_factory=dict)
    queries: dict[int, tuple[str, int]] = field(default_factory=dict)
    deferred: list[Message] = field(default_factory=list)
    trying: str | None = None
    waiting: list[Message] = field(default_factory=list)
    buffer: list[Message] = field(default_factory=list)
    commits: list[str] = field(default_factory=list)
    joint: Counter = field(default_factory=Counter)
    # causal knowledge of commit counts, and how recent each peer's word is
    seen: Counter = field(default_factory=Counter)
    heard: Counter = field(default_factory=Counter)
    round: int = 0
    refusals: int = 0
    attempts: int = 0
    _arrivals: int = 0
    _next_query: int = 0
    _restart_pending: bool = False

    def __post_init__(self) -> None:
        self.spec = self.sys.process(self.pid)
        if not self.state:
            self.state = self.spec.initial
        self.sim.register(self.pid, self.receive)

    # helpers ----------------------------------------------------------------

    def negotiator(self, a: str) -> str | None:
        return self.negotiators.get(a)

    def to_negotiate(self, a: str) -> bool:
        return self.negotiators.get(a) == self.pid

    def prio_free(self, a: str) -> bool:
        return not self.sys.higher(a)

    def peer(self, a: str) -> str:
        return self.sys.peer(a, self.pid)

    def globally_ready(self, a: str) -> bool:
        """Local knowledge: a is locally ready here and the peer has offered it."""
        return a in self.possible and a in self.known

    def send(self, kind: MessageKind, a: str, dst: str | None = None, **kw) -> float:
        """Send and return the delivery time."""
        dst = dst or self.peer(a)
        if kind is POSSIBLE:
            kw.setdefault("phase", self.phase)
        kw["clock"] = dict(self.seen)
        return self.sim.send(Message(kind, a, self.pid, dst, epoch=self.joint[dst], **kw))

    def log(self, event: str, a: str = "", info: str = "") -> None:
        self.sim.log(event, src=self.pid, interaction=a, info=info)

    def common_cycle(self, a: str, b: str) -> CycleDescriptor | None:
        for cyc in self.cycles:
            if a in cyc.interactions and b in cyc.interactions:
                return cyc
        return None

    # lifecycle ----------------------------------------------------------------

    def start(self) -> None:
        self.enter_ready()

    def receive(self, msg: Message) -> None:
        if self.mode != "ready":
            self.buffer.append(msg)
            return
        self.dispatch(msg)

    def dispatch(self, msg: Message) -> None:
        if msg.interaction not in self.spec.alphabet and msg.kind not in (READY, NOTREADY):
            raise ProtocolFault(f"{self.pid} got {msg} for a foreign interaction")
        for pid, n in msg.clock.items():
            if n > self.seen[pid]:
                self.seen[pid] = n
        self.heard[msg.src] = max(self.heard[msg.src], msg.clock.get(msg.src, 0))
        kind = msg.kind
        if kind is POSSIBLE:
            self.on_possible(msg)
        elif kind is NOTPOSSIBLE:
            self.on_notpossible(msg)
        elif kind in (READY, NOTREADY) and msg.reply:
            self.on_answer(msg)
        elif kind is READY:
            self.answer_query(msg)
        elif kind is COMMIT:
            self.on_commit(msg)
        elif kind is REFUSE:
            self.on_refuse(msg)
        else:
            raise ProtocolFault(f"{self.pid} cannot handle {msg}")

    def enter_ready(self) -> None:
        self.mode = "ready"
        self.phase += 1
        self.phase_start = self.sim.now
        here = locally_ready(self.spec, self.state)
        self.possible = [a for a in self.sys.order if a in here]
        # withdraw every offer, ours or the peer's, we can no longer honour
        stale = [a for a in sorted(self.known, key=self.known.__getitem__) if a not in here]
        stale += sorted(self.offered - here - set(stale), key=self.sys.order.index)
        for a in stale:
            self.known.pop(a, None)
            self.offered.discard(a)
            self.send(NOTPOSSIBLE, a)
        # a refusal only described the peer's view of our previous state
        self.not_ready = set()
        self.trying = None
        self.waiting = []
        self.ready_at = {}
        self.log("phase", info=",".join(self.possible))
        if not self.possible:
            self.log("stuck")
        self.answer_deferred()
        self.check_global_readiness(drain=True)

    def check_global_readiness(self, drain: bool = False) -> None:
        """(Re)start the readiness round from the offers known so far."""
        self.round += 1
        self._restart_pending = False
        self.ready_set = set()
        self.negotiations = {}
        for a in sorted(self.known, key=self.known.__getitem__):
            if self.mode != "ready" or self.trying is not None:
                break
            if a in self.possible:
                self.evaluate(a)
        if drain:
            while self.buffer and self.mode == "ready":
                self.dispatch(self.buffer.pop(0))
        if self.mode != "ready" or self.trying is not None:
            return
        # dominators first, so a peer never sees an offer before ours for a higher one
        for a in sorted(self.possible, key=lambda a: len(self.sys.higher(a))):
            if a not in self.known and a not in self.offered and a not in self.not_ready:
                self.send(POSSIBLE, a)
                self.offered.add(a)

    def mark_ready(self, a: str) -> None:
        if a not in self.ready_set:
            self.ready_set.add(a)
            self.ready_at.setdefault(a, self.sim.now)
            self.log("ready", a)

    # Main ---------------------------------------------------------------------

    def on_possible(self, msg: Message) -> None:
        a = msg.interaction
        self.not_ready.discard(a)
        if a not in self.possible:
            self.known.pop(a, None)
            self.send(NOTPOSSIBLE, a)
            return
        self._arrivals += 1
        self.known[a] = self._arrivals
        renewed = self.known_phase.get(a, msg.phase) != msg.phase
        self.known_phase[a] = msg.phase
        if renewed and a in self.negotiations:
            self.kill(a)
        if self.trying is None:
            self.evaluate(a)
        self.changed()

    def evaluate(self, a: str) -> None:
        """React to ``a`` being known globally ready."""
        if self.trying is not None or self.mode != "ready":
            return
        if self.to_negotiate(a):
            self.mark_ready(a)
            for b in list(self.negotiations):
                if self.sys.less(b, a):
                    self.kill(b)
            if a not in self.negotiations:
                self.start_negotiation(a)
        elif self.prio_free(a):
            self.mark_ready(a)
            self.try_to_commit(a)
        else:
            self.mark_ready(a)
            if a not in self.offered:
                self.send(POSSIBLE, a)
                self.offered.add(a)

    def on_notpossible(self, msg: Message) -> None:
        a = msg.interaction
        self.known.pop(a, None)
        self.offered.discard(a)
        if msg.epoch < self.joint[msg.src]:
            # sent before our last joint commit moved the peer: ask again
            if self.mode == "ready" and self.trying is None and a in self.possible:
                self.send(POSSIBLE, a)
                self.offered.add(a)
            return
        self.not_ready.add(a)
        self.ready_set.discard(a)
        if a in self.negotiations:
            self.kill(a)
        self.changed()

    def on_refuse(self, msg: Message) -> None:
        a = msg.interaction
        self.known.pop(a, None)
        self.ready_set.discard(a)
        if self.trying == a:
            self.log("nok", a)
            self.trying = None
            # serve the queue in arrival order before probing again
            while self.waiting:
                if self.accept(self.waiting.pop(0)):
                    return
            self.check_global_readiness()
        elif a in self.negotiations:
            self.kill(a)
            self.maybe_restart()
        self.changed()

    def changed(self) -> None:
        """Local knowledge moved: re-check parked queries and local negotiations."""
        if self.mode != "ready":
            return
        self.answer_deferred()
        if self.trying is None:
            for a in list(self.negotiations):
                if self.negotiations.get(a) and self.negotiations[a].outcome is None:
                    self.check_negotiation(a)
            self.maybe_restart()

    def maybe_restart(self) -> None:
        """All negotiations came back NOK: probe again after one message latency."""
        if self.trying is not None or self._restart_pending:
            return
        live = [n for n in self.negotiations.values() if n.outcome is None]
        failed = [n for n in self.negotiations.values() if n.outcome is False]
        if live or not failed:
            return
        self._restart_pending = True
        rnd, phase = self.round, self.phase
        self.sim.at(self.sim.now + self.sim.latency.mean, self._restart, rnd, phase)

    def _restart(self, rnd: int, phase: int) -> None:
        if self.mode == "ready" and self.round == rnd and self.phase == phase and self.trying is None:
            self.check_global_readiness()

    # Negotiate ------------------------------------------------------------------

    def start_negotiation(self, a: str) -> None:
        neg = Negotiation(a, set(self.sys.higher(a)))
        self.negotiations[a] = neg
        self.log("spawn", a)
        for c in sorted(neg.pending, key=self.sys.order.index):
            owner = self.negotiator(c)
            if owner != self.pid and c in self.possible:
                if c in self.known:
                    # we already know c is globally ready
                    self.finish(a, False)
                    return
                if c not in self.offered:
                    # the owner must hear our offer before the question
                    self.send(POSSIBLE, c)
                    self.offered.add(c)
            if owner != self.pid:
                self.ask(c)
        self.check_negotiation(a)

    def ask(self, c: str) -> None:
        self._next_query += 1
        self.queries[self._next_query] = (c, self.round)
        self.send(READY, c, dst=self.negotiator(c), ref=self._next_query)

    def check_negotiation(self, a: str) -> None:
        neg = self.negotiations[a]
        for c in list(neg.pending):
            if self.negotiator(c) != self.pid:
                continue
            if self.globally_ready(c):
                self.finish(a, False)
                return
            if c not in self.possible or (c in self.not_ready and self.current(c)):
                neg.pending.discard(c)
        if not neg.pending:
            self.settle(a)

    def on_answer(self, msg: Message) -> None:
        entry = self.queries.pop(msg.ref, None)
        if entry is None or entry[1] != self.round or self.trying is not None:
            return
        c = entry[0]
        for a, neg in list(self.negotiations.items()):
            if neg.outcome is not None or c not in neg.pending:
                continue
            if msg.kind is READY:
                self.finish(a, False)
            else:
                neg.pending.discard(c)
                neg.answers[c] = msg.clock
                if not neg.pending:
                    self.settle(a)
            if self.trying is not None:
                return

    def settle(self, a: str) -> None:
        """Every dominator said no; re-ask those whose answer predates a known commit."""
        neg = self.negotiations[a]
        for c, clock in list(neg.answers.items()):
            if any(clock.get(y, 0) < self.seen[y]
                   for y in self.sys.participants(c) if y != self.pid):
                del neg.answers[c]
                neg.pending.add(c)
                self.ask(c)
        if not neg.pending:
            self.finish(a, True)

    def finish(self, a: str, ok: bool) -> None:
        neg = self.negotiations[a]
        if neg.outcome is not None:
            return
        neg.outcome = ok
        self.log("negotiated", a, "OK" if ok else "NOK")
        if ok:
            self.try_to_commit(a)
        else:
            self.maybe_restart()

    def kill(self, a: str) -> None:
        neg = self.negotiations.pop(a, None)
        if neg is not None and neg.outcome is None:
            self.log("kill", a)

    # AnswerNegotiators ---------------------------------------------------------

    def current(self, c: str) -> bool:
        """Is the peer's refusal of c as recent as anything we know about the peer?

        If not, ask again: the peer answers every offer.
        """
        y = self.peer(c)
        if self.heard[y] >= self.seen[y]:
            return True
        self.not_ready.discard(c)
        if c not in self.offered:
            self.send(POSSIBLE, c)
            self.offered.add(c)
        return False

    def readiness(self, c: str) -> bool | None:
        if c not in self.possible:
            return False
        if c in self.known:
            return True
        if c in self.not_ready and self.current(c):
            return False
        return None

    def answer_query(self, msg: Message) -> None:
        c = msg.interaction
        if self.negotiator(c) != self.pid:
            raise ProtocolFault(f"{self.pid} asked about {c} it does not negotiate")
        # mid-commit our state is about to move: answer afterwards
        status = None if self.trying is not None else self.readiness(c)
        if status is None:
            self.deferred.append(msg)
            self.log("defer", c, msg.src)
            return
        self.send(READY if status else NOTREADY, c, dst=msg.src, ref=msg.ref, reply=True)

    def answer_deferred(self) -> None:
        parked, self.deferred = self.deferred, []
        for msg in parked:
            self.answer_query(msg)

    # WaitingForCommit / TryToCommit -------------------------------------------

    def stale(self, msg: Message) -> bool:
        """A COMMIT whose priority check predates our last commit."""
        return bool(self.sys.higher(msg.interaction)) and msg.phase != self.phase

    def acceptable(self, msg: Message) -> bool:
        a, src = msg.interaction, msg.src
        if a not in self.possible:
            return False
        if self.to_negotiate(a) and not self.prio_free(a):
            return False
        for c in self.sys.higher(a):
            # never accept while a local dominator is known to be ready
            if self.globally_ready(c):
                return False
            # the initiator may not have seen our offer for c yet
            if c in self.possible and self.peer(c) == src and c not in self.not_ready:
                return False
            if c in self.possible and c in self.not_ready and not self.current(c):
                return False
            # the initiator must know c's other participants as well as we do
            for y in self.sys.participants(c):
                if y not in (self.pid, src) and msg.clock.get(y, 0) < self.seen[y]:
                    return False
        return True

    def on_commit(self, msg: Message) -> None:
        a = msg.interaction
        if self.trying is None:
            self.accept(msg)
            return
        if a == self.trying:
            self.fire(msg, initiator=True, done_at=self.sim.now)
            return
        cyc = self.common_cycle(a, self.trying) if self.cyclebreaking else None
        if cyc is not None and msg.src != cyc.cyclebreaker:
            self.refuse(msg)
            self.ready_set.discard(a)
        else:
            self.waiting.append(msg)
            self.log("queue", a, msg.src)

    def refuse(self, msg: Message) -> None:
        a = msg.interaction
        self.refusals += 1
        self.offered.discard(a)
        if a not in self.possible:
            self.known.pop(a, None)
        self.send(REFUSE, a, dst=msg.src)
        # a refusal consumes the offer; renew it at once if we still can
        if self.mode == "ready" and self.trying is None and a in self.possible:
            self.send(POSSIBLE, a)
            self.offered.add(a)

    def accept(self, msg: Message) -> bool:
        a = msg.interaction
        if not self.acceptable(msg) or self.stale(msg):
            self.refuse(msg)
            return False
        self.fire(msg, initiator=False, done_at=self.send(COMMIT, a))
        return True

    def try_to_commit(self, a: str) -> None:
        if self.trying is not None:
            return
        for b in list(self.negotiations):
            self.kill(b)
        self.round += 1
        self.trying = a
        self.attempts += 1
        self.log("try", a)
        self.send(COMMIT, a, phase=self.known_phase.get(a, -1))

    def fire(self, msg: Message, initiator: bool, done_at: float) -> None:
        a = msg.interaction
        # the peer's COMMIT left before its own firing
        peer = msg.src
        self.seen[peer] = max(self.seen[peer], msg.clock.get(peer, 0) + 1)
        # a was globally ready up to this instant
        parked, self.deferred = self.deferred, []
        for q in parked:
            if q.interaction == a:
                self.send(READY, a, dst=q.src, ref=q.ref, reply=True)
            else:
                self.deferred.append(q)
        for msg in self.waiting:
            if msg.interaction != a:
                self.refuse(msg)
        self.waiting = []
        self.known.pop(a, None)
        self.offered.discard(a)
        self.commits.append(a)
        self.joint[self.peer(a)] += 1
        self.seen[self.pid] = len(self.commits)
        record = CommitRecord(
            a, self.sim.now, self.phase_start, self.ready_at.get(a), done_at, initiator
        )
        self.log("commit", a, json.dumps(record.__dict__))
        self.mode = "busy"
        self.trying = None
        self.negotiations = {}
        self.ready_set = set()
        self.round += 1
        self.notify(self, record)
        work = self.sys.work.get(a, 0.0)
        self.sim.at(self.sim.now + work, self.busy_complete, a)

    def busy_complete(self, a: str) -> None:
        self.state = self.spec.successors(self.state, a)[0]
        self.log("busy-exit", a, self.state)
        self.enter_ready()
