import itertools

import pytest

from hypothesis import strategies as st

from prioctl.model import ProcessSpec, SystemSpec


@st.composite
def systems(draw, max_procs=4, max_states=3, max_labels=5, with_priorities=True):
    """Random well-formed systems: each label is placed on exactly two processes."""
    n = draw(st.integers(2, max_procs))
    pids = [f"P{i}" for i in range(1, n + 1)]
    pairs = list(itertools.combinations(pids, 2))
    k = draw(st.integers(1, max_labels))
    owners = {f"i{j}": draw(st.sampled_from(pairs)) for j in range(k)}
    procs = []
    for pid in pids:
        labels = [a for a, pair in owners.items() if pid in pair]
        m = draw(st.integers(1, max_states))
        states = [f"q{s}" for s in range(m)]
        trans = []
        for a in labels:
            # at least one transition per label so the alphabet is right
            for _ in range(draw(st.integers(1, 2))):
                trans.append((draw(st.sampled_from(states)), a, draw(st.sampled_from(states))))
        procs.append(ProcessSpec(pid, tuple(states), "q0", tuple(dict.fromkeys(trans))))
    prios = []
    if with_priorities and k > 1:
        labels = sorted(owners)
        # acyclic by construction: only lower index < higher index in a shuffled rank
        rank = draw(st.permutations(labels))
        for lo, hi in itertools.combinations(rank, 2):
            if draw(st.integers(0, 3)) == 0:
                prios.append((lo, hi))
    return SystemSpec(
        processes=tuple(procs),
        interactions={a: tuple(sorted(pair, key=pids.index)) for a, pair in owners.items()},
        priorities=frozenset(prios),
        order=tuple(sorted(owners)),
    )


def gains_maximality(sys):
    """Brute force: can firing some a make an inhibited, independent b maximal?

    Such systems defeat every protocol on the all-linearizations check, since
    b may only fire after a but nothing orders the two per process.
    """
    from prioctl.model import _all_successors, enabled, globally_ready, reachable_states

    for g in reachable_states(sys):
        ready, en = globally_ready(sys, g), enabled(sys, g)
        for a in en:
            pa = set(sys.participants(a))
            for b in ready - en:
                if pa & set(sys.participants(b)):
                    continue
                if any(b in enabled(sys, h) for h in _all_successors(sys, g, a)):
                    return True
    return False


# acceptance reporting -------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    mark = getattr(report, "criterion", None)
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry = _CRITERIA.setdefault(mark[0], [mark[1], True])
        entry[1] = entry[1] and report.outcome == "passed"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}")
