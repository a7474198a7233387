from __future__ import annotations

import pytest

from conftest import ALL_SCENARIOS, scenario
from interlocking.explorer import (
    classify_terminals,
    enabled_transitions,
    explore,
    flank_check,
    replay,
    successors,
    trace_to,
)
from interlocking.kernel import StationModel
from interlocking.layout import Direction
from interlocking.oracle import OracleCapExceeded, brute_force_oracle
from interlocking.report import machine_report
from interlocking.scenario import Scenario
from interlocking.state import AccidentKind, Device, Priority, RouteStatus, digest
from interlocking.table import Position
from test_kernel import set_route

DOWN = Direction.DOWN


def counts(report):
    return report.nodes, report.arcs, sorted(report.terminals), report.accident_markings, \
        report.derailment_markings, sorted(map(str, (a for a, _ in report.accidents)))


def test_release_beats_train_moves(mini_model):
    m = set_route(mini_model, mini_model.initial_marking([("D1", "3-1T", DOWN)]), "3-3(3)")
    m = m._replace(trains=(m.trains[0]._replace(track="101T"),))
    kinds = [t.kind for t, _ in successors(mini_model, m)]
    assert kinds == ["release"]
    every = {t.kind for t, _ in successors(mini_model, m, priorities=False)}
    assert {"release", "move", "spawn"} <= every


def test_stuck_setting_only_cancels(mini_layout, mini_table):
    model = StationModel(mini_layout, mini_table)
    m = model._with_device(model.initial_marking(), "102", Device(Position.REVERSE, ("15(2)",)))
    m = model.fire_set_route(m, "3-3(3)")
    m = model.fire_lock_step_normal(m, "3-3(3)", "101")
    (only,) = enabled_transitions(model, m)
    assert only.kind == "cancel"


def test_empty_scenario(mini_layout, mini_table):
    report = explore(Scenario(mini_layout, mini_table))
    assert (report.nodes, report.arcs, len(report.terminals)) == (1, 0, 1)
    assert classify_terminals(report).empty_of_trains == report.terminals


@pytest.mark.parametrize("name", ALL_SCENARIOS)
def test_oracle_agrees(name):
    sc = scenario(name)
    assert counts(explore(sc)) == counts(brute_force_oracle(sc))


@pytest.mark.parametrize("modes", [{"priorities": False}, {"auto": False}, {"flank": False},
                                   {"auto": False, "priorities": False}])
def test_oracle_agrees_in_other_modes(modes):
    sc = scenario("tiny_loop_basic").with_modes(**modes)
    assert counts(explore(sc)) == counts(brute_force_oracle(sc))
    sc = scenario("mini_flank_17").with_modes(**modes)
    assert counts(explore(sc)) == counts(brute_force_oracle(sc))


def test_oracle_cap():
    with pytest.raises(OracleCapExceeded):
        brute_force_oracle(scenario("mini_case_d"), cap=50)


def test_oracle_single_train_departs():
    sc = scenario("tiny_loop_basic")
    sc = Scenario(sc.layout, sc.table, queues={"E": ("T1",)})
    report = brute_force_oracle(sc)
    assert report.terminals
    for d in report.terminals:
        m = report.terminal_markings[d]
        assert m.trains == () and sum(m.departed) == 1


def test_oracle_confirms_priority_reduction():
    sc = scenario("mini_flank_17").with_modes(removed_signals=())
    on = brute_force_oracle(sc)
    off = brute_force_oracle(sc.with_modes(priorities=False))
    assert on.nodes < off.nodes


@pytest.mark.parametrize("name", ["tiny_loop_basic", "mini_flank_17"])
def test_priorities_never_grow_state_space(name):
    sc = scenario(name)
    assert explore(sc).nodes <= explore(sc.with_modes(priorities=False)).nodes


@pytest.mark.parametrize("name", ["mini_case_c2", "mini_case_d"])
def test_auto_mode_has_fewer_deadlocks(name):
    sc = scenario(name)
    auto = classify_terminals(explore(sc))
    manual = classify_terminals(explore(sc.with_modes(auto=False)))
    assert len(auto.safe_deadlock) < len(manual.safe_deadlock)


def test_determinism():
    sc = scenario("mini_case_a")
    first = machine_report(explore(sc)).render(with_elapsed=False)
    assert first == machine_report(explore(sc)).render(with_elapsed=False)


def test_trace_to_initial_is_empty():
    report = explore(scenario("tiny_loop_basic"))
    assert trace_to(report, digest(report.initial)) == []


def test_trace_unknown_digest():
    report = explore(scenario("tiny_loop_basic"))
    with pytest.raises(KeyError):
        trace_to(report, "0" * 24)


def test_accident_traces_replay():
    report = explore(scenario("mini_flank_17").with_modes(flank=False))
    assert report.accidents
    for rec, d in report.accidents:
        trace = trace_to(report, d)
        assert trace[-1].kind == "move"
        end = replay(report.model, report.initial, trace)
        assert digest(end) == d and rec in end.accidents


def test_traces_are_shortest():
    report = explore(scenario("tiny_loop_basic"))
    depth = {0: 0}
    for nid in range(1, report.nodes):
        parent, _ = report._parents[nid]
        depth[nid] = depth[parent] + 1
    # breadth-first: depths never decrease along the node order
    assert all(depth[i] <= depth[i + 1] for i in range(report.nodes - 1))


def test_cap_marks_incomplete():
    report = explore(scenario("mini_case_d"), cap=10)
    assert report.incomplete and report.nodes == 10


def test_terminals_have_no_successors():
    report = explore(scenario("mini_case_c3"))
    for d in report.terminals:
        assert successors(report.model, report.terminal_markings[d]) == []


def test_classification():
    c2 = classify_terminals(explore(scenario("mini_case_c2")))
    assert c2.safe_deadlock and not c2.accident_terminal
    d = classify_terminals(explore(scenario("mini_case_d")))
    assert d.empty_of_trains


def test_flank_check_pass():
    verdict = flank_check(scenario("mini_flank_17"))
    assert verdict.verdict == "PASS"
    assert verdict.with_flank.accident_markings == 0
    side = [a for a, _ in verdict.without_flank.accidents if a.kind is AccidentKind.HEAD_TO_SIDE]
    assert side and all(a.at == "102T" for a in side)


def test_flank_check_vacuous():
    assert flank_check(scenario("tiny_loop_vacuous")).verdict == "VACUOUS"


def test_flank_check_needs_removed_signal():
    with pytest.raises(ValueError):
        flank_check(scenario("mini_case_b"))


def _both_set(model, m):
    return model.runtime(m, "3-3(3)").status is model.runtime(m, "15(2)").status is RouteStatus.SET


def test_stripped_flank_lets_unrelated_routes_coexist():
    # 3-3(3) and 15(2) are not in conflict; only flank protection separates them
    sc = scenario("mini_flank_17").with_modes(removed_signals=(), flank=False)
    report = explore(sc)
    assert any(_both_set(report.model, m) for m in report._nodes)
    guarded = explore(sc.with_modes(flank=True))
    assert not any(_both_set(guarded.model, m) for m in guarded._nodes)


def test_priority_enum_order():
    assert Priority.INTERLOCK_INTERNAL > Priority.LOCK_NORMAL > Priority.LOCK_REVERSE > Priority.COMPLETE \
        > Priority.ROUTE_REQUEST > Priority.TRAIN_MOVE > Priority.CANCEL
