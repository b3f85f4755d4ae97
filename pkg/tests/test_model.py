import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prioctl.model import (
    ModelError,
    PreconditionError,
    ProcessSpec,
    SystemSpec,
    TooLargeError,
    all_linearizations_valid,
    enabled,
    globally_ready,
    linearizations,
    priority_cycle,
    reachable_states,
    step,
    transitive_closure,
    validate_trace,
)
from prioctl.harness import philosophers, ring

from conftest import systems


def loop(pid, *labels):
    return ProcessSpec.from_transitions(pid, "s", [("s", a, "s") for a in labels])


# brute-force oracles ---------------------------------------------------------

def closure_oracle(pairs, universe):
    rel = {(a, b) for a, b in pairs}
    for k in universe:
        for i in universe:
            for j in universe:
                if (i, k) in rel and (k, j) in rel:
                    rel.add((i, j))
    return rel


def acyclic_oracle(pairs, universe):
    """A relation is acyclic iff some ordering of the universe respects every pair."""
    for perm in itertools.permutations(universe):
        pos = {a: i for i, a in enumerate(perm)}
        if all(pos[a] < pos[b] for a, b in pairs):
            return True
    return False


def ready_oracle(sys, g):
    out = set()
    for a, (p, q) in sys.interactions.items():
        ok = True
        for pid in (p, q):
            proc = sys.process(pid)
            state = g[sys.index(pid)]
            ok &= any(src == state and b == a for src, b, _ in proc.transitions)
        if ok:
            out.add(a)
    return out


# process and composition -----------------------------------------------------

def test_alphabet_is_derived_from_transitions():
    p = ProcessSpec.from_transitions("P", "a", [("a", "x", "b"), ("b", "y", "a")])
    assert p.alphabet == {"x", "y"}
    assert p.states == ("a", "b")


def test_alphabet_mismatch_is_rejected():
    with pytest.raises(ModelError, match="alphabet"):
        ProcessSpec("P", ("s",), "s", (("s", "x", "s"),), frozenset({"x", "z"}))


def test_unknown_initial_state():
    with pytest.raises(ModelError):
        ProcessSpec("P", ("s",), "t", ())


def test_compose_rejects_local_and_ternary_labels():
    with pytest.raises(ModelError, match="binary"):
        SystemSpec.compose([loop("P1", "a", "solo"), loop("P2", "a")])
    with pytest.raises(ModelError, match="binary"):
        SystemSpec.compose([loop("P1", "a"), loop("P2", "a"), loop("P3", "a")])


def test_compose_orders_participants_by_process_index():
    sys = SystemSpec.compose([loop("B", "x"), loop("A", "x")])
    assert sys.participants("x") == ("B", "A")
    assert sys.peer("x", "A") == "B"


def test_cyclic_priorities_rejected_at_load():
    with pytest.raises(ModelError, match="cyclic"):
        SystemSpec.compose([loop("P1", "a", "b"), loop("P2", "a", "b")], [("a", "b"), ("b", "a")])


def test_negotiator_must_participate():
    with pytest.raises(ModelError):
        SystemSpec.compose(
            [loop("P1", "a"), loop("P2", "a", "b"), loop("P3", "b")], negotiators={"a": "P3"}
        )


# semantics -------------------------------------------------------------------

def test_ring_d3_all_ready_enables_only_a1():
    sys = ring(4, 3)
    g = sys.initial_state()
    assert globally_ready(sys, g) == {"a1", "a2", "a3", "a4"}
    assert enabled(sys, g) == {"a1"}


def test_empty_order_enabled_equals_ready():
    sys = ring(4, 0)
    g = sys.initial_state()
    assert enabled(sys, g) == globally_ready(sys, g)


def test_philosophers_second_fork_beats_first():
    sys = philosophers("priorities")
    # beta holds Y (wants X via fork2_beta), alpha still thinking (wants X)
    g = ("t", "h", "beta_y")
    ready = globally_ready(sys, g)
    assert {"fork1_alpha", "fork2_beta"} <= ready
    assert "fork1_alpha" not in enabled(sys, g)
    assert "fork2_beta" in enabled(sys, g)


def test_step_requires_readiness_and_picks_smallest_target():
    p = ProcessSpec.from_transitions("P", "s", [("s", "a", "z"), ("s", "a", "b")])
    sys = SystemSpec.compose([p, loop("Q", "a")])
    assert step(sys, sys.initial_state(), "a") == ("b", "s")
    sys2 = SystemSpec.compose([ProcessSpec.from_transitions("P", "s", [("t", "a", "s")]), loop("Q", "a")])
    with pytest.raises(PreconditionError):
        step(sys2, sys2.initial_state(), "a")


def test_step_leaves_others_unchanged():
    sys = ring(4, 0)
    g = step(sys, sys.initial_state(), "a1")
    assert g == sys.initial_state()


def test_state_well_formedness_checked():
    sys = ring(4, 0)
    with pytest.raises(ModelError):
        globally_ready(sys, ("s", "s"))
    with pytest.raises(ModelError):
        globally_ready(sys, ("s", "s", "s", "nope"))


@settings(max_examples=150, deadline=None)
@given(systems())
def test_ready_and_enabled_match_oracle(sys):
    for g in reachable_states(sys):
        ready = ready_oracle(sys, g)
        assert globally_ready(sys, g) == ready
        closure = closure_oracle(sys.priorities, list(sys.interactions))
        expect = {a for a in ready if not any((a, b) in closure for b in ready)}
        assert enabled(sys, g) == expect


@settings(max_examples=100, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)), max_size=14))
def test_closure_matches_warshall(pairs):
    pairs = {(f"x{a}", f"x{b}") for a, b in pairs if a != b}
    universe = sorted({x for p in pairs for x in p})
    assert transitive_closure(pairs) == closure_oracle(pairs, universe)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7).flatmap(
    lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12))
))
def test_priority_cycle_matches_brute_force(arg):
    n, raw = arg
    pairs = {(f"a{x}", f"a{y}") for x, y in raw}
    universe = [f"a{i}" for i in range(n)]
    cyc = priority_cycle(pairs)
    assert (cyc is None) == acyclic_oracle(pairs, universe)
    if cyc is not None:
        # the witness really is a cycle of the relation
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            assert (a, b) in pairs


def test_reachable_states_cap():
    sys = ring(4, 0)
    assert reachable_states(sys) == [sys.initial_state()]
    big = SystemSpec.compose([
        ProcessSpec.from_transitions("P", "0", [(str(i), "a", str(i + 1)) for i in range(5)]),
        ProcessSpec.from_transitions("Q", "0", [(str(i), "a", str(i + 1)) for i in range(5)]),
    ])
    with pytest.raises(TooLargeError):
        reachable_states(big, cap=3)


# traces ------------------------------------------------------------------------

def test_validate_trace_flags_priority_violation():
    sys = ring(4, 1)
    v = validate_trace(sys, sys.initial_state(), ["a2"])
    assert v is not None and v.index == 0 and v.reason == "priority-inhibited"
    assert v.inhibitors == ("a1",)
    assert validate_trace(sys, sys.initial_state(), ["a1", "a3"]) is None


def test_validate_trace_flags_unready():
    sys = philosophers("priorities")
    v = validate_trace(sys, sys.initial_state(), ["fork2_alpha"])
    assert v.reason == "not-globally-ready"


def test_linearizations_of_independent_commits():
    sys = ring(4, 0)
    per = {"P1": ["a1"], "P2": ["a1"], "P3": ["a3"], "P4": ["a3"]}
    assert sorted(map(tuple, linearizations(sys, per))) == [("a1", "a3"), ("a3", "a1")]


def test_linearizations_reject_unmatched_commit():
    sys = ring(4, 0)
    with pytest.raises(ModelError):
        list(linearizations(sys, {"P1": ["a1"], "P2": []}))


def test_all_linearizations_finds_the_bad_order():
    sys = ring(4, 1)
    # a2 then a1 on P2 is fine only if a1 was not ready, which it always is
    per = {"P1": ["a1"], "P2": ["a2", "a1"], "P3": ["a2"], "P4": []}
    assert all_linearizations_valid(sys, per) is not None
    with pytest.raises(TooLargeError):
        all_linearizations_valid(sys, {"P1": ["a1"] * 9, "P2": ["a1"] * 9}, bound=8)


@settings(max_examples=60, deadline=None)
@given(systems(max_procs=3, max_labels=3, with_priorities=False))
def test_linearization_count_matches_permutation_oracle(sys):
    """Count interleavings of a random valid run by filtering all permutations."""
    g = sys.initial_state()
    run = []
    for _ in range(4):
        ready = sorted(globally_ready(sys, g))
        if not ready:
            break
        run.append(ready[0])
        g = step(sys, g, ready[0])
    per = {p.id: [a for a in run if p.id in sys.participants(a)] for p in sys.processes}
    events = [(a, run[:i].count(a)) for i, a in enumerate(run)]
    expected = set()
    for perm in itertools.permutations(events):
        ok = all(
            [e[0] for e in perm if pid in sys.participants(e[0])] == per[pid]
            for pid in per
        )
        if ok:
            expected.add(tuple(e[0] for e in perm))
    got = {tuple(lin) for lin in linearizations(sys, per)}
    assert got == expected
