"""Exhaustive breadth-first state-space generation.

Successors are computed under global priorities: a transition is enabled
only when no transition of a strictly higher priority class is enabled
anywhere in the marking.  With priorities off every enabled transition
fires, which is the baseline for measuring the reduction.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .kernel import StationModel
from .motion import enabled_moves, fire_move, fire_spawn
from .scenario import Modes, Scenario
from .state import (
    AccidentKind,
    AccidentRecord,
    Marking,
    Priority,
    RouteStatus,
    TransitionInstance,
    digest,
)
from .table import Position

DEFAULT_CAP = 10_000_000


def _internal(model: StationModel, m: Marking) -> list[TransitionInstance]:
    out = []
    entries = []
    for i, rt in enumerate(m.routes):
        if rt.status is not RouteStatus.SET:
            continue
        rid = model.route_ids[i]
        if model.release_step_enabled(m, rid):
            out.append(TransitionInstance("release", (rid,), Priority.INTERLOCK_INTERNAL))
        if rt.cleared:
            entries.append(model.routes[i].entry)
    for s in sorted(set(entries)):
        if model.replacement_enabled(m, s):
            out.append(TransitionInstance("replace", (s,), Priority.INTERLOCK_INTERNAL))
    return out


def _locks(model: StationModel, m: Marking, position: Position) -> list[TransitionInstance]:
    if m.setting is None:
        return []
    rt = model.runtime(m, m.setting)
    pending = rt.pending_normal if position is Position.NORMAL else rt.pending_reverse
    kind, prio = (("lock_normal", Priority.LOCK_NORMAL) if position is Position.NORMAL
                  else ("lock_reverse", Priority.LOCK_REVERSE))
    return [TransitionInstance(kind, (m.setting, dev), prio)
            for dev in pending if model.lock_step_enabled(m, m.setting, dev, position)]


def _complete(model: StationModel, m: Marking) -> list[TransitionInstance]:
    if m.setting is not None and model.complete_enabled(m, m.setting):
        return [TransitionInstance("complete", (m.setting,), Priority.COMPLETE)]
    return []


def _commands(model: StationModel, m: Marking) -> list[TransitionInstance]:
    prio = model.request_priority
    out = []
    if m.setting is None:
        out += [TransitionInstance("request", (rid,), prio)
                for rid in model.route_ids if model.guard_set_route(m, rid)]
    if not model.auto:
        out += [TransitionInstance("signalman_cancel", (rid,), prio)
                for i, rid in enumerate(model.route_ids)
                if m.routes[i].status is RouteStatus.SET and model.signalman_cancel_enabled(m, rid)]
    return out


def _cancel(model: StationModel, m: Marking) -> list[TransitionInstance]:
    if m.setting is not None:
        return [TransitionInstance("cancel", (m.setting,), Priority.CANCEL)]
    return []


def enabled_transitions(model: StationModel, m: Marking, priorities: bool = True) -> list[TransitionInstance]:
    """Enabled transition instances in deterministic order, priority-filtered if asked."""
    by_class = [
        lambda: _internal(model, m),
        lambda: _locks(model, m, Position.NORMAL),
        lambda: _locks(model, m, Position.REVERSE),
        lambda: _complete(model, m),
        lambda: _commands(model, m) if model.auto else [],
        lambda: (_commands(model, m) if not model.auto else []) + enabled_moves(model, m),
        lambda: _cancel(model, m),
    ]
    out: list[TransitionInstance] = []
    for gen in by_class:
        got = gen()
        if got and priorities:
            return got
        out += got
    return out


def fire(model: StationModel, m: Marking, tr: TransitionInstance) -> Marking:
    kind, args = tr.kind, tr.args
    if kind == "move":
        return fire_move(model, m, args[0], tr.move)
    if kind == "spawn":
        return fire_spawn(model, m, args[0])
    if kind == "release":
        return model.fire_release_step(m, args[0])
    if kind == "replace":
        return model.fire_signal_replacement(m, args[0])
    if kind == "lock_normal":
        return model.fire_lock_step_normal(m, *args)
    if kind == "lock_reverse":
        return model.fire_lock_step_reverse(m, *args)
    if kind == "complete":
        return model.fire_complete_setting(m, args[0])
    if kind == "request":
        return model.fire_set_route(m, args[0])
    if kind == "signalman_cancel":
        return model.fire_signalman_cancel(m, args[0])
    if kind == "cancel":
        return model.fire_cancel_setting(m)
    raise ValueError(f"unknown transition kind {kind!r}")


def successors(model: StationModel, m: Marking, priorities: bool = True) -> list[tuple[TransitionInstance, Marking]]:
    return [(tr, fire(model, m, tr)) for tr in enabled_transitions(model, m, priorities)]


@dataclass
class StateSpaceReport:
    scenario: str
    modes: Modes
    nodes: int = 0
    arcs: int = 0
    terminals: list[str] = field(default_factory=list)
    accident_markings: int = 0
    derailment_markings: int = 0
    accidents: list[tuple[AccidentRecord, str]] = field(default_factory=list)
    incomplete: bool = False
    elapsed: float = 0.0
    terminal_markings: dict[str, Marking] = field(default_factory=dict, repr=False)
    model: StationModel | None = field(default=None, repr=False)
    initial: Marking | None = field(default=None, repr=False)
    _nodes: list[Marking] = field(default_factory=list, repr=False)
    _parents: list[tuple[int, TransitionInstance | None]] = field(default_factory=list, repr=False)
    _digest_ids: dict[str, int] | None = field(default=None, repr=False)

    def accident_counts(self) -> dict[str, int]:
        counts = {k.value: 0 for k in AccidentKind}
        for rec, _ in self.accidents:
            counts[rec.kind.value] += 1
        return counts


def explore(scenario: Scenario, cap: int = DEFAULT_CAP) -> StateSpaceReport:
    model, initial = scenario.build()
    return explore_model(model, initial, priorities=scenario.modes.priorities, cap=cap,
                         name=scenario.name, modes=scenario.modes)


def explore_model(model: StationModel, initial: Marking, *, priorities: bool = True,
                  cap: int = DEFAULT_CAP, name: str = "scenario", modes: Modes | None = None
                  ) -> StateSpaceReport:
    started = time.perf_counter()
    report = StateSpaceReport(name, modes or Modes(auto=model.auto, priorities=priorities),
                              model=model, initial=initial)
    index = {initial: 0}
    nodes = report._nodes
    parents = report._parents
    nodes.append(initial)
    parents.append((-1, None))
    seen_records: set[AccidentRecord] = set()
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        m = nodes[nid]
        succ = successors(model, m, priorities)
        report.arcs += len(succ)
        if not succ:
            d = digest(m)
            report.terminals.append(d)
            report.terminal_markings[d] = m
        if m.accidents:
            report.accident_markings += 1
            if any(a.kind is AccidentKind.DERAILMENT for a in m.accidents):
                report.derailment_markings += 1
            for rec in m.accidents:
                if rec not in seen_records:
                    seen_records.add(rec)
                    report.accidents.append((rec, digest(m)))
        for tr, nxt in succ:
            if nxt in index:
                continue
            if len(nodes) >= cap:
                report.incomplete = True
                continue
            index[nxt] = len(nodes)
            nodes.append(nxt)
            parents.append((nid, tr))
            queue.append(index[nxt])
    report.nodes = len(nodes)
    report.elapsed = time.perf_counter() - started
    return report


@dataclass
class TerminalClasses:
    empty_of_trains: list[str]
    safe_deadlock: list[str]
    accident_terminal: list[str]


def is_empty_of_trains(model: StationModel, m: Marking) -> bool:
    if m.trains:
        return False
    return all(m.spawned[i] == len(model.queues[b]) for i, b in enumerate(model.border_ids))


def classify_terminals(report: StateSpaceReport) -> TerminalClasses:
    out = TerminalClasses([], [], [])
    for d in report.terminals:
        m = report.terminal_markings[d]
        if m.accidents:
            out.accident_terminal.append(d)
        elif is_empty_of_trains(report.model, m):
            out.empty_of_trains.append(d)
        else:
            out.safe_deadlock.append(d)
    return out


def trace_to(report: StateSpaceReport, target: str) -> list[TransitionInstance]:
    """Shortest firing sequence from the initial marking to the marking with ``target`` digest."""
    if report._digest_ids is None:
        report._digest_ids = {digest(m): i for i, m in enumerate(report._nodes)}
    nid = report._digest_ids.get(target)
    if nid is None:
        raise KeyError(f"unknown marking digest {target!r}")
    path = []
    while nid > 0:
        parent, tr = report._parents[nid]
        path.append(tr)
        nid = parent
    path.reverse()
    return path


def replay(model: StationModel, initial: Marking, trace, priorities: bool = True) -> Marking:
    m = initial
    for tr in trace:
        for cand, nxt in successors(model, m, priorities):
            if cand == tr:
                m = nxt
                break
        else:
            raise ValueError(f"{tr} is not enabled during replay")
    return m


@dataclass
class FlankVerdict:
    verdict: str  # PASS, FAIL or VACUOUS
    with_flank: StateSpaceReport
    without_flank: StateSpaceReport


def flank_check(scenario: Scenario, cap: int = DEFAULT_CAP) -> FlankVerdict:
    """Two explorations with the signal(s) removed: flank protection on, then off.

    PASS needs no accident with flank protection and at least one without
    it.  No accident without it either means the flank requirement is not
    exercised by the scenario (VACUOUS).
    """
    if not scenario.modes.removed_signals:
        raise ValueError("flank check needs at least one removed signal")
    on = explore(scenario.with_modes(flank=True), cap)
    off = explore(scenario.with_modes(flank=False), cap)
    if on.accident_markings:
        verdict = "FAIL"
    elif off.accident_markings == 0:
        verdict = "VACUOUS"
    else:
        verdict = "PASS"
    return FlankVerdict(verdict, on, off)
