import pytest
from hypothesis import given, settings

from prioctl.analysis import (
    CONCURRENT,
    PRIORITIZED,
    STRUCTURAL,
    assign_negotiators,
    check_priority_order,
    check_report,
    classify_conflicts,
    detect_confusion,
    enumerate_cycles,
    render_report,
)
from prioctl.harness import triangle, philosophers, ring, star
from prioctl.model import ModelError, ProcessSpec, SystemSpec, enabled, globally_ready, reachable_states
from prioctl.modelfile import loads

from conftest import systems


def loop(pid, *labels):
    return ProcessSpec.from_transitions(pid, "s", [("s", a, "s") for a in labels])


CONFUSION = """
process P1 init s
  s -a-> s
process P2 init s0
  s0 -a-> s1
  s1 -c-> s0
process P3 init t
  t -b-> t
  t -c-> t
process P4 init u
  u -b-> u
priority b < c
"""


def test_order_validator_reports_cycle():
    v = check_priority_order([("a", "b"), ("b", "c"), ("c", "a")])
    assert v is not None and set(v.cycle) == {"a", "b", "c"}
    assert check_priority_order([("a", "b"), ("b", "c")]) is None
    assert check_priority_order([]) is None


def test_order_validator_rejects_unknown_names():
    with pytest.raises(ModelError):
        check_priority_order([("a", "zz")], interactions=["a", "b"])


def test_conflict_kinds():
    kinds = {c.pair: c.kind for c in classify_conflicts(ring(4, 2))}
    assert kinds[("a4", "a1")] == STRUCTURAL
    assert kinds[("a1", "a3")] == PRIORITIZED
    assert kinds[("a4", "a2")] == CONCURRENT


def test_star_has_only_structural_conflicts():
    assert {c.kind for c in classify_conflicts(star(3))} == {STRUCTURAL}
    assert classify_conflicts(star(1)) == []


def test_confusion_witness():
    sys = loads(CONFUSION)
    [w] = detect_confusion(sys)
    assert (w.fired, w.victim, w.inhibitors) == ("a", "b", ("c",))
    assert w.state == ("s", "s0", "t", "u")
    assert w.after == ("s", "s1", "t", "u")


def test_no_priorities_means_no_confusion():
    assert detect_confusion(ring(4, 0)) == []
    assert detect_confusion(philosophers("priorities")) == []


@settings(max_examples=80, deadline=None)
@given(systems())
def test_confusion_matches_definition(sys):
    """Oracle: enumerate enabled concurrent pairs and look for post-fire inhibition."""
    expect = set()
    for g in reachable_states(sys):
        top = enabled(sys, g)
        for a in top:
            for b in top:
                if a == b or set(sys.participants(a)) & set(sys.participants(b)):
                    continue
                # every successor along a, not only the smallest one
                p, q = sys.participants(a)
                for sp in sys.process(p).successors(g[sys.index(p)], a):
                    for sq in sys.process(q).successors(g[sys.index(q)], a):
                        h = list(g)
                        h[sys.index(p)], h[sys.index(q)] = sp, sq
                        ready = globally_ready(sys, tuple(h))
                        if b in ready and sys.higher(b) & ready:
                            expect.add((g, a, b))
    got = {(w.state, w.fired, w.victim) for w in detect_confusion(sys)}
    assert got == expect


def test_default_negotiator_is_lowest_index_and_overrides_win():
    sys = ring(4, 4)
    neg = assign_negotiators(sys)
    assert neg == {"a4": "P1", "a1": "P2", "a2": "P2", "a3": "P3"}
    assert assign_negotiators(sys, {"a1": "P1"})["a1"] == "P1"
    with pytest.raises(ModelError):
        assign_negotiators(sys, {"a1": "P3"})
    assert assign_negotiators(ring(4, 0)) == {}


def test_philosophers_forks_negotiate_everything():
    assert set(assign_negotiators(philosophers("priorities")).values()) == {"Forks"}


def test_triangle_has_one_cycle_with_default_breaker():
    [c] = enumerate_cycles(triangle())
    assert set(c.interactions) == {"a", "b", "c"}
    assert c.processes == ("P1", "P2", "P3")
    assert c.cyclebreaker == "P1"
    assert not c.potential


def test_cyclebreaker_override():
    base = triangle()
    sys = SystemSpec.compose(base.processes, cyclebreakers={frozenset("abc"): "P3"})
    [c] = enumerate_cycles(sys)
    assert c.cyclebreaker == "P3"
    bad = SystemSpec.compose(
        list(base.processes) + [loop("P4", "d"), loop("P5", "d")],
        cyclebreakers={frozenset("abc"): "P4"},
    )
    with pytest.raises(ModelError):
        enumerate_cycles(bad)


def test_parallel_edges_make_two_cycles():
    sys = SystemSpec.compose([loop("P1", "x", "y", "z"), loop("P2", "x", "y", "z")])
    keys = {c.key for c in enumerate_cycles(sys)}
    assert keys == {frozenset("xy"), frozenset("xz"), frozenset("yz")}


def test_chorded_square_yields_only_chordless_cycles():
    # square P1-P2-P3-P4 with diagonal P1-P3
    sys = SystemSpec.compose([
        loop("P1", "a", "d", "e"), loop("P2", "a", "b"), loop("P3", "b", "c", "e"), loop("P4", "c", "d"),
    ])
    keys = {c.key for c in enumerate_cycles(sys)}
    assert keys == {frozenset("abe"), frozenset("cde")}


def test_ring_cycle_is_potential_when_never_fully_enabled():
    [c] = enumerate_cycles(ring(4, 3))
    assert c.potential
    [c0] = enumerate_cycles(ring(4, 0))
    assert not c0.potential


def test_report_renders():
    report = check_report(loads(CONFUSION))
    text = render_report(report)
    assert "confusion: 1 witness" in text
    assert report["negotiators"] == {"c": "P2", "b": "P3"}
    assert "cycles: 1" in render_report(check_report(triangle()))
