"""Deterministic discrete-event transport.

Channels are reliable and FIFO per ordered pair of processes; every message
is delivered after a finite simulated delay.  All randomness is drawn from a
single seeded generator so a (model, seed, latency, schedule) tuple always
yields the same trace.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable

EPSILON = 1e-6

SCHEDULES = ("fifo", "random", "adversarial")

DELIVERY = 0
TIMER = 1


@dataclass(frozen=True)
class LatencyModel:
    """Constant latency ``mean`` ms, optionally jittered uniformly by ``jitter``."""

    mean: float = 0.2
    jitter: float = 0.0

    def sample(self, rng: random.Random) -> float:
        if self.jitter > 0:
            value = rng.uniform(self.mean - self.jitter, self.mean + self.jitter)
        else:
            value = self.mean
        return max(value, EPSILON)


@dataclass
class TraceRecord:
    time: float
    event: str
    kind: str = ""
    src: str = ""
    dst: str = ""
    interaction: str = ""
    seq: int = -1
    deliver_at: float = -1.0
    info: str = ""


@dataclass
class Channel:
    src: str
    dst: str
    seq: int = 0
    last_time: float = -1.0
    last_tie: float = 0.0


@dataclass
class ExecutionTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def add(self, record: TraceRecord) -> None:
        self.records.append(record)

    def of(self, event: str) -> list[TraceRecord]:
        return [r for r in self.records if r.event == event]

    def sent_by_kind(self) -> Counter:
        return Counter(r.kind for r in self.records if r.event == "send")

    def check_fifo(self) -> bool:
        """Receive order equals send order on every channel."""
        sent: dict[tuple[str, str], list[int]] = {}
        got: dict[tuple[str, str], list[int]] = {}
        for r in self.records:
            if r.event == "send":
                sent.setdefault((r.src, r.dst), []).append(r.seq)
            elif r.event == "recv":
                got.setdefault((r.src, r.dst), []).append(r.seq)
        for ch, seqs in got.items():
            if seqs != sent.get(ch, [])[: len(seqs)]:
                return False
        return True

    def check_no_duplication(self, quiescent: bool = False) -> bool:
        """Received multiset is contained in (or, at quiescence, equal to) the sent one."""
        key = lambda r: (r.src, r.dst, r.seq, r.kind, r.interaction)
        sent = Counter(key(r) for r in self.records if r.event == "send")
        got = Counter(key(r) for r in self.records if r.event == "recv")
        if got - sent:
            return False
        return sent == got if quiescent else True

    def dumps(self) -> str:
        return "\n".join(json.dumps(asdict(r), sort_keys=True) for r in self.records)

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps() + "\n")


class Simulator:
    """Event heap keyed by (time, rank, tie, seq).

    ``fifo`` orders equal-time events by rank (deliveries before timers) and
    then by creation order.  ``random`` and ``adversarial`` permute equal-time
    events with the seeded generator; ``adversarial`` also drops the rank so
    timers race with deliveries.  Same-channel deliveries keep their send
    order under every policy.
    """

    def __init__(
        self,
        latency: LatencyModel | None = None,
        schedule: str = "fifo",
        seed: int = 0,
    ) -> None:
        if schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {schedule!r}")
        self.latency = latency or LatencyModel()
        self.schedule = schedule
        self.rng = random.Random(seed)
        self.now = 0.0
        self.trace = ExecutionTrace()
        self.endpoints: dict[str, Callable[[Any], None]] = {}
        self._heap: list[tuple] = []
        self._seq = 0
        self._channels: dict[tuple[str, str], Channel] = {}
        self.in_flight = 0

    def register(self, pid: str, handler: Callable[[Any], None]) -> None:
        self.endpoints[pid] = handler

    def channel(self, src: str, dst: str) -> Channel:
        ch = self._channels.get((src, dst))
        if ch is None:
            ch = self._channels[(src, dst)] = Channel(src, dst)
        return ch

    def _tie(self) -> float:
        return 0.0 if self.schedule == "fifo" else self.rng.random()

    def _push(self, time: float, rank: int, tie: float, fn: Callable, args: tuple) -> None:
        if self.schedule == "adversarial":
            rank = 0
        heapq.heappush(self._heap, (time, rank, tie, self._seq, fn, args))
        self._seq += 1

    def send(self, msg: Any) -> float:
        """Schedule delivery of ``msg``; returns the delivery time."""
        if msg.src == msg.dst:
            raise ValueError("a process does not message itself")
        ch = self.channel(msg.src, msg.dst)
        at = self.now + self.latency.sample(self.rng)
        if at < ch.last_time:
            at = ch.last_time + EPSILON
        tie = self._tie()
        if at == ch.last_time and self.schedule != "fifo":
            tie = ch.last_tie + (1.0 - ch.last_tie) * tie
        ch.last_time, ch.last_tie = at, tie
        msg.seq = ch.seq
        ch.seq += 1
        self.trace.add(
            TraceRecord(self.now, "send", msg.kind.name, msg.src, msg.dst,
                        msg.interaction, msg.seq, at, getattr(msg, "note", ""))
        )
        self.in_flight += 1
        self._push(at, DELIVERY, tie, self._deliver, (msg,))
        return at

    def _deliver(self, msg: Any) -> None:
        self.in_flight -= 1
        self.trace.add(
            TraceRecord(self.now, "recv", msg.kind.name, msg.src, msg.dst,
                        msg.interaction, msg.seq)
        )
        self.endpoints[msg.dst](msg)

    def at(self, time: float, fn: Callable, *args: Any) -> None:
        """Run ``fn(*args)`` at simulated ``time`` (never in the past)."""
        self._push(max(time, self.now), TIMER, self._tie(), fn, args)

    def log(self, event: str, **fields: Any) -> None:
        self.trace.add(TraceRecord(self.now, event, **fields))

    def pending(self) -> int:
        return len(self._heap)

    def run(
        self,
        stop: Callable[[], bool] | None = None,
        max_time: float | None = None,
    ) -> str:
        """Dispatch events until ``stop()`` holds, time runs out or nothing is left.

        Returns ``"stop"``, ``"time"`` or ``"quiescent"``.
        """
        while self._heap:
            if stop is not None and stop():
                return "stop"
            time = self._heap[0][0]
            if max_time is not None and time > max_time:
                self.now = max_time
                return "time"
            _, _, _, _, fn, args = heapq.heappop(self._heap)
            self.now = time
            fn(*args)
        if stop is not None and stop():
            return "stop"
        return "quiescent"


def replay_key(records: Iterable[TraceRecord]) -> list[tuple]:
    """A hashable projection of a trace for bit-identity comparisons."""
    return [tuple(asdict(r).values()) for r in records]
