"""Brute-force reference exploration used to cross-check :mod:`explorer`.

Deliberately naive: every guard is evaluated for every candidate argument
combination in every marking, priority filtering is applied afterwards,
moves come straight from the layout (no template cache), and the visited
set is keyed by the textual form of the marking.  Only the firing rules are
shared with the fast explorer.
"""

from __future__ import annotations

from .explorer import StateSpaceReport, fire, is_empty_of_trains  # noqa: F401
from .layout import Direction, moves_from
from .motion import move_enabled, spawn_enabled
from .scenario import Scenario
from .state import AccidentKind, Priority, TransitionInstance, digest
from .table import Position

ORACLE_CAP = 200_000


class OracleCapExceeded(RuntimeError):
    pass


def _all_enabled(model, m) -> list[TransitionInstance]:
    cands: list[TransitionInstance] = []
    devices = model.point_ids + model.derailer_ids
    for rid in model.route_ids:
        if model.guard_set_route(m, rid):
            cands.append(TransitionInstance("request", (rid,), model.request_priority))
        for dev in devices:
            if model.lock_step_enabled(m, rid, dev, Position.NORMAL):
                cands.append(TransitionInstance("lock_normal", (rid, dev), Priority.LOCK_NORMAL))
            if model.lock_step_enabled(m, rid, dev, Position.REVERSE):
                cands.append(TransitionInstance("lock_reverse", (rid, dev), Priority.LOCK_REVERSE))
        if model.complete_enabled(m, rid):
            cands.append(TransitionInstance("complete", (rid,), Priority.COMPLETE))
        if not model.auto and model.signalman_cancel_enabled(m, rid):
            cands.append(TransitionInstance("signalman_cancel", (rid,), model.request_priority))
        if model.release_step_enabled(m, rid):
            cands.append(TransitionInstance("release", (rid,), Priority.INTERLOCK_INTERNAL))
    if model.cancel_enabled(m):
        cands.append(TransitionInstance("cancel", (m.setting,), Priority.CANCEL))
    for sid in sorted(model.layout.signals):
        if model.replacement_enabled(m, sid):
            cands.append(TransitionInstance("replace", (sid,), Priority.INTERLOCK_INTERNAL))
    for t in m.trains:
        for d in Direction:
            for mv in moves_from(model.layout, t.track, d):
                if move_enabled(model, m, t.id, mv):
                    cands.append(TransitionInstance(
                        "move", (t.id, t.track, mv.dest or f"exit:{mv.border}"), Priority.TRAIN_MOVE, mv))
    for bi, b in enumerate(model.border_ids):
        if spawn_enabled(model, m, b):
            cands.append(TransitionInstance("spawn", (b, model.queues[b][m.spawned[bi]]), Priority.TRAIN_MOVE))
    return cands


def brute_force_oracle(scenario: Scenario, cap: int = ORACLE_CAP) -> StateSpaceReport:
    model, initial = scenario.build()
    priorities = scenario.modes.priorities
    report = StateSpaceReport(scenario.name, scenario.modes, model=model, initial=initial)
    seen = {repr(initial)}
    stack = [initial]
    records = {}
    while stack:
        m = stack.pop()
        report.nodes += 1
        enabled = _all_enabled(model, m)
        if priorities and enabled:
            top = max(tr.priority for tr in enabled)
            enabled = [tr for tr in enabled if tr.priority == top]
        report.arcs += len(enabled)
        if not enabled:
            d = digest(m)
            report.terminals.append(d)
            report.terminal_markings[d] = m
        if m.accidents:
            report.accident_markings += 1
            if any(a.kind is AccidentKind.DERAILMENT for a in m.accidents):
                report.derailment_markings += 1
            for rec in m.accidents:
                records.setdefault(rec, digest(m))
        for tr in enabled:
            nxt = fire(model, m, tr)
            key = repr(nxt)
            if key not in seen:
                if len(seen) >= cap:
                    raise OracleCapExceeded(f"more than {cap} markings")
                seen.add(key)
                stack.append(nxt)
    report.accidents = sorted(records.items())
    return report
