"""Train movement, accident classification, border arrivals and departures.

A train has no length and sits on exactly one track.  Moves into an occupied
track are generated, not blocked: the resulting collision is a reachable
state the verifier must see.

Accident classification:

* mover lands on an occupied track -> ``H2T_H2H``;
* facing move diverted by the point onto an occupied leg, or trailing move
  against the point position into an occupied joint -> ``Head2Side``;
* trailing move against the point position onto a clear joint, or entering
  a track whose derailer is in the derail position -> ``Derailment``.

Trains involved in an accident stay where they are and never move again.
"""

from __future__ import annotations

from .kernel import StationModel
from .layout import MoveKind, MoveTemplate
from .state import (
    AccidentKind,
    AccidentRecord,
    Aspect,
    Marking,
    Priority,
    RouteStatus,
    Train,
    TransitionInstance,
    frozen_trains,
)
from .table import Position


def _point_leg(model: StationModel, m: Marking, point: str) -> str:
    spec = model.layout.points[point]
    return spec.leg(model.device(m, point).position is Position.REVERSE)


def move_enabled(model: StationModel, m: Marking, train: str, mv: MoveTemplate) -> bool:
    """Guard of a single move template for one train."""
    t = next((x for x in m.trains if x.id == train), None)
    if t is None or t.id in frozen_trains(m):
        return False
    if mv.source != t.track or mv.direction is not t.direction:
        return False
    if mv.signal is not None and mv.front and mv.signal in model.layout.signals:
        if model.aspect_of(m, mv.signal) is Aspect.RED:
            return False
    if mv.kind is MoveKind.POINT and mv.facing:
        # the point, not the driver, picks the leg
        return mv.dest == _point_leg(model, m, mv.point)
    return True


def enabled_moves(model: StationModel, m: Marking) -> list[TransitionInstance]:
    frozen = frozen_trains(m) if m.accidents else frozenset()
    aspects: dict[str, Aspect] = {}
    out = []
    for t in m.trains:
        if t.id in frozen:
            continue
        for mv in model.moves(t.track, t.direction):
            if mv.front and mv.signal is not None:
                a = aspects.get(mv.signal)
                if a is None:
                    a = aspects[mv.signal] = model.aspect_of(m, mv.signal)
                if a is Aspect.RED:
                    continue
            if mv.facing and mv.dest != _point_leg(model, m, mv.point):
                continue
            out.append(TransitionInstance("move", (t.id, t.track, mv.dest or f"exit:{mv.border}"),
                                          Priority.TRAIN_MOVE, mv))
    for bi, b in enumerate(model.border_ids):
        if spawn_enabled(model, m, b):
            queue = model.queues[b]
            out.append(TransitionInstance("spawn", (b, queue[m.spawned[bi]]), Priority.TRAIN_MOVE))
    return out


def fire_move(model: StationModel, m: Marking, train: str, mv: MoveTemplate) -> Marking:
    trains = list(m.trains)
    pos = next(i for i, x in enumerate(trains) if x.id == train)
    mover = trains[pos]

    if mv.kind is MoveKind.BORDER_EXIT:
        del trains[pos]
        bi = model.border_ids.index(mv.border)
        departed = m.departed[:bi] + (m.departed[bi] + 1,) + m.departed[bi + 1:]
        return m._replace(trains=tuple(trains), departed=departed)

    dest = mv.dest
    side_on = False
    derail = False
    if mv.kind is MoveKind.POINT:
        actual = _point_leg(model, m, mv.point)
        if mv.facing:
            side_on = actual != mv.dest
            dest = actual
        elif mv.leg != actual:
            side_on = derail = True

    occupants = sorted(x.id for x in trains if x.track == dest and x.id != train)
    trains[pos] = Train(mover.id, dest, mover.direction)
    m = m._replace(trains=tuple(trains))

    record = None
    if occupants:
        kind = AccidentKind.HEAD_TO_SIDE if side_on else AccidentKind.HEAD_TO_TAIL_HEAD_TO_HEAD
        record = AccidentRecord(kind, tuple(sorted((train, occupants[0]))), dest)
    elif derail:
        record = AccidentRecord(AccidentKind.DERAILMENT, (train,), dest)
    else:
        d = model.layout.derailer_on(dest)
        if d is not None and model.device(m, d).position is Position.NORMAL:
            record = AccidentRecord(AccidentKind.DERAILMENT, (train,), dest)
    if record is not None:
        m = m._replace(accidents=tuple(sorted(m.accidents + (record,))))
    return m


def spawn_enabled(model: StationModel, m: Marking, border: str) -> bool:
    """Next queued train may enter when its block section is clear and the border track unreserved."""
    bi = model.border_ids.index(border)
    if m.spawned[bi] >= len(model.queues[border]):
        return False
    block = model.block_tracks[bi]
    if any(t.track in block for t in m.trains):
        return False
    track = model.borders[bi].track
    return not any(m.routes[i].status is RouteStatus.SET for i in model.track_routes.get(track, ()))


def fire_spawn(model: StationModel, m: Marking, border: str) -> Marking:
    bi = model.border_ids.index(border)
    b = model.borders[bi]
    train = Train(model.queues[border][m.spawned[bi]], b.track, b.inbound)
    spawned = m.spawned[:bi] + (m.spawned[bi] + 1,) + m.spawned[bi + 1:]
    trains = tuple(sorted(m.trains + (train,), key=lambda t: t.id))
    return m._replace(trains=trains, spawned=spawned)
