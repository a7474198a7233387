"""Acceptance criteria, one marker per criterion.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section of the summary: one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import time

import pytest

from conftest import ALL_SCENARIOS, scenario
from interlocking.explorer import classify_terminals, enabled_transitions, explore, flank_check, successors
from interlocking.oracle import brute_force_oracle
from interlocking.report import machine_report
from interlocking.state import AccidentKind, RouteStatus
from interlocking.table import conflicts_closed

acceptance = pytest.mark.acceptance
TIME_LIMIT = 60.0
NOMINAL = {"flank": True, "priorities": True, "auto": True, "removed_signals": ()}


def summary(report):
    return (report.nodes, report.arcs, sorted(report.terminals), report.accident_markings,
            report.derailment_markings, sorted(str(a) for a, _ in report.accidents))


@acceptance(1, "SAFETY")
@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_safety(name):
    start = time.perf_counter()
    report = explore(scenario(name).with_modes(**NOMINAL))
    elapsed = time.perf_counter() - start
    assert not report.incomplete
    assert report.accident_markings == 0 and report.derailment_markings == 0
    assert elapsed < TIME_LIMIT


@acceptance(2, "ORACLE EQUIVALENCE")
@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_oracle_equivalence(name):
    sc = scenario(name)
    assert summary(explore(sc)) == summary(brute_force_oracle(sc))


@acceptance(3, "PRIORITY REDUCTION")
def test_priority_reduction():
    sc = scenario("mini_case_b")
    on = explore(sc).nodes
    off = explore(sc.with_modes(priorities=False)).nodes
    print(f"case B nodes: priorities on {on}, off {off}, ratio {on / off:.3f}")
    assert on < off


@acceptance(4, "AUTO-MODE DEADLOCK REDUCTION")
def test_auto_mode_deadlock_reduction():
    sc = scenario("mini_case_b")
    auto = classify_terminals(explore(sc)).safe_deadlock
    manual = classify_terminals(explore(sc.with_modes(auto=False))).safe_deadlock
    print(f"case B safe deadlocks: auto {len(auto)}, manual {len(manual)}")
    assert len(auto) < len(manual)


@acceptance(5, "FLANK PROOF PAIR")
def test_flank_proof_pair():
    start = time.perf_counter()
    verdict = flank_check(scenario("mini_flank_17"))
    elapsed = time.perf_counter() - start
    assert verdict.verdict == "PASS"
    assert verdict.with_flank.accident_markings == 0
    side = [a for a, _ in verdict.without_flank.accidents if a.kind is AccidentKind.HEAD_TO_SIDE]
    assert any(a.at == "102T" for a in side)
    assert elapsed < TIME_LIMIT


def _reachable(name, **modes):
    report = explore(scenario(name).with_modes(**modes))
    assert not report.incomplete
    return report


@acceptance(6, "FLANK HOLD")
@pytest.mark.parametrize("modes", [{}, {"auto": False}, {"priorities": False}])
def test_flank_hold(modes):
    report = _reachable("tiny_loop_basic", **modes)
    model, table = report.model, report.model.table
    checked = 0
    for m in report._nodes:
        for rid in table.ids:
            if model.runtime(m, rid).status is not RouteStatus.SET:
                continue
            for demand in table.flank_of(rid).demands():
                dev = model.device(m, demand.point)
                assert dev.position is demand.position and rid in dev.locked_by, (rid, demand)
                checked += 1
    assert checked > 0


KERNEL_RUNS = [("tiny_loop_basic", {}), ("tiny_loop_basic", {"auto": False}),
               ("mini_case_b", {}), ("mini_case_d", {"auto": False})]


@acceptance(7, "MUTUAL EXCLUSION + INHIBITOR + RESET ATOMICITY")
@pytest.mark.parametrize("name, modes", KERNEL_RUNS)
def test_kernel_invariants(name, modes):
    report = _reachable(name, **modes)
    model, ids = report.model, report.model.table.ids
    cancels = 0
    for m in report._nodes:
        status = {rid: model.runtime(m, rid).status for rid in ids}
        live = [r for r in ids if status[r] is RouteStatus.SET]
        for i, a in enumerate(live):
            for b in live[i + 1:]:
                assert not conflicts_closed(model.table, a, b), (a, b)
        setting = [r for r in ids if status[r] is RouteStatus.SETTING]
        assert len(setting) <= 1
        assert m.setting == (setting[0] if setting else None)
        cancel = [t for t in enabled_transitions(model, m, report.modes.priorities) if t.kind == "cancel"]
        if cancel:
            cancels += 1
            after = [n for t, n in successors(model, m, report.modes.priorities) if t.kind == "cancel"]
            assert len(after) == 1
            (n,) = after
            rt = model.runtime(n, m.setting)
            assert n.setting is None and rt.status is RouteStatus.NORMAL
            assert rt.pending_normal == () and rt.pending_reverse == ()
            assert all(m.setting not in d.locked_by for d in n.points + n.derailers)
    if name.startswith("mini"):
        assert cancels > 0


DETERMINISM_RUNS = [(name, {}) for name in ALL_SCENARIOS] + [("mini_flank_17", {"flank": False})]


@acceptance(8, "DETERMINISM")
@pytest.mark.parametrize("name, modes", DETERMINISM_RUNS)
def test_determinism(name, modes):
    sc = scenario(name).with_modes(**modes)
    first = machine_report(explore(sc)).render(with_elapsed=False)
    second = machine_report(explore(sc)).render(with_elapsed=False)
    assert first == second


@acceptance(9, "TERMINAL CLASSIFICATION")
def test_terminal_classification():
    for name in ("mini_case_c2", "mini_case_c3"):
        assert len(classify_terminals(explore(scenario(name))).safe_deadlock) >= 1, name
    assert len(classify_terminals(explore(scenario("mini_case_d"))).empty_of_trains) >= 1
