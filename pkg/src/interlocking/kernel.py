"""The interlocking state machine.

Every guard is a pure predicate over a marking and every ``fire_*`` method
returns a new marking; nothing here mutates shared state.
"""

from __future__ import annotations

from .layout import BorderSpec, Direction, LayoutGraph, MoveTemplate, SignalKind, moves_from
from .state import (
    Aspect,
    Device,
    Marking,
    Priority,
    ReleaseStage,
    RouteRuntime,
    RouteStatus,
    Train,
)
from .table import AspectRule, InterlockingTable, Position, RouteSpec, conflicts_closed

LEGAL_ASPECTS = {
    SignalKind.WARNER: {Aspect.YELLOW, Aspect.GREEN},
    SignalKind.HOME: {Aspect.RED, Aspect.YELLOW, Aspect.GREEN},
    SignalKind.STARTER: {Aspect.RED, Aspect.GREEN},
}


class StationModel:
    """Layout + table + operating mode, compiled for fast guard evaluation.

    ``auto`` selects automatic route setting (a route is requested only when
    a train of the right direction waits on its approach track).  With
    ``auto=False`` the signalman may request any route at any time and may
    cancel a cleared route that is not approach locked.
    """

    def __init__(self, layout: LayoutGraph, table: InterlockingTable, *, auto: bool = True,
                 queues: dict[str, tuple[str, ...]] | None = None):
        self.layout = layout
        self.table = table
        self.auto = auto
        self.queues = {b: tuple((queues or {}).get(b, ())) for b in sorted(layout.borders)}
        unknown = set(queues or {}) - set(layout.borders)
        if unknown:
            raise ValueError(f"queues for unknown border(s): {', '.join(sorted(unknown))}")

        clash = set(layout.points) & set(layout.derailers)
        if clash:
            raise ValueError(f"ids used for both a point and a derailer: {', '.join(sorted(clash))}")
        self.point_ids = sorted(layout.points)
        self.derailer_ids = sorted(layout.derailers)
        self._device_slot = {p: ("points", i) for i, p in enumerate(self.point_ids)}
        self._device_slot.update({d: ("derailers", i) for i, d in enumerate(self.derailer_ids)})

        self.route_ids = sorted(table.ids)
        self.ridx = {r: i for i, r in enumerate(self.route_ids)}
        self.routes: list[RouteSpec] = [table.route(r) for r in self.route_ids]
        self.border_ids = sorted(layout.borders)
        self.borders: list[BorderSpec] = [layout.borders[b] for b in self.border_ids]

        n = len(self.routes)
        self.conflicts = [
            tuple(j for j in range(n) if conflicts_closed(table, self.route_ids[i], self.route_ids[j]))
            for i in range(n)
        ]
        self.demand = []
        self.normal_demands = []
        self.reverse_demands = []
        self.flank_tracks = []
        for r in self.routes:
            flank = table.flank_of(r.id)
            wanted: dict[str, Position] = {}
            for d in r.points + flank.demands():
                wanted[d.point] = d.position
            for dev in wanted:
                if dev not in self._device_slot:
                    raise ValueError(f"route {r.id!r} demands unknown device {dev!r}")
            self.demand.append(wanted)
            self.normal_demands.append(tuple(sorted(d for d, p in wanted.items() if p is Position.NORMAL)))
            self.reverse_demands.append(tuple(sorted(d for d, p in wanted.items() if p is Position.REVERSE)))
            self.flank_tracks.append(tuple(flank.tracks_clear))
        self.routes_by_entry: dict[str, tuple[int, ...]] = {}
        for i, r in enumerate(self.routes):
            self.routes_by_entry[r.entry] = self.routes_by_entry.get(r.entry, ()) + (i,)
            if r.entry not in layout.signals:
                raise ValueError(f"route {r.id!r} has unknown entry signal {r.entry!r}")
        self.track_routes: dict[str, tuple[int, ...]] = {}
        for i, r in enumerate(self.routes):
            for t in r.tracks:
                self.track_routes[t] = self.track_routes.get(t, ()) + (i,)

        self.block_tracks = [self._block_section(b) for b in self.borders]
        self._moves: dict[tuple[str, Direction], tuple[MoveTemplate, ...]] = {}

    def _block_section(self, border: BorderSpec) -> tuple[str, ...]:
        """Tracks from a border inwards up to the first stop signal facing the arrivals.

        Traffic beyond the border is abstracted to a block: the next train is
        admitted only once the previous one has passed the station's first
        stop signal, so this stretch never holds two trains.
        """
        section = [border.track]
        while True:
            nxt = self.layout.next_tracks(section[-1], border.inbound)
            if len(nxt) != 1 or nxt[0] in section:
                break
            sig = self.layout._signal_at.get((section[-1], nxt[0]))
            if sig is not None and sig.facing is border.inbound and sig.kind is not SignalKind.WARNER:
                break
            section.append(nxt[0])
        return tuple(section)

    # -- helpers ---------------------------------------------------------

    def moves(self, track: str, direction: Direction) -> tuple[MoveTemplate, ...]:
        key = (track, direction)
        got = self._moves.get(key)
        if got is None:
            got = self._moves[key] = tuple(moves_from(self.layout, track, direction))
        return got

    def initial_marking(self, trains=()) -> Marking:
        return Marking(
            trains=tuple(sorted((Train(*t) for t in trains), key=lambda t: t.id)),
            points=tuple(Device() for _ in self.point_ids),
            derailers=tuple(Device() for _ in self.derailer_ids),
            routes=tuple(RouteRuntime() for _ in self.route_ids),
            setting=None,
            spawned=tuple(0 for _ in self.border_ids),
            departed=tuple(0 for _ in self.border_ids),
        )

    def device(self, m: Marking, dev: str) -> Device:
        field, i = self._device_slot[dev]
        return getattr(m, field)[i]

    def _with_device(self, m: Marking, dev: str, state: Device) -> Marking:
        field, i = self._device_slot[dev]
        seq = getattr(m, field)
        return m._replace(**{field: seq[:i] + (state,) + seq[i + 1:]})

    def runtime(self, m: Marking, route: str) -> RouteRuntime:
        return m.routes[self.ridx[route]]

    def _with_route(self, m: Marking, i: int, rt: RouteRuntime) -> Marking:
        return m._replace(routes=m.routes[:i] + (rt,) + m.routes[i + 1:])

    def _drop_locks(self, m: Marking, route: str) -> Marking:
        def strip(devs):
            return tuple(Device(d.position, tuple(x for x in d.locked_by if x != route))
                         if route in d.locked_by else d for d in devs)
        return m._replace(points=strip(m.points), derailers=strip(m.derailers))

    @staticmethod
    def occupied(m: Marking) -> set[str]:
        return {t.track for t in m.trains}

    def _index(self, route: str) -> int:
        try:
            return self.ridx[route]
        except KeyError:
            raise KeyError(f"unknown route {route!r}") from None

    # -- route setting ---------------------------------------------------

    def _conflicts_normal(self, m: Marking, i: int) -> bool:
        return all(m.routes[j].status is RouteStatus.NORMAL for j in self.conflicts[i])

    def _tracks_clear(self, occ: set[str], i: int) -> bool:
        return (not any(t in occ for t in self.routes[i].tracks)
                and not any(t in occ for t in self.flank_tracks[i]))

    def _approach_train(self, m: Marking, i: int) -> bool:
        r = self.routes[i]
        facing = self.layout.signals[r.entry].facing
        frozen = {t for a in m.accidents for t in a.trains}
        return any(t.track == r.approach and t.direction is facing and t.id not in frozen
                   for t in m.trains)

    def guard_set_route(self, m: Marking, route: str) -> bool:
        i = self._index(route)
        if m.routes[i].status is not RouteStatus.NORMAL or m.setting is not None:
            return False
        if not self._conflicts_normal(m, i):
            return False
        if not self._tracks_clear(self.occupied(m), i):
            return False
        return not self.auto or self._approach_train(m, i)

    def fire_set_route(self, m: Marking, route: str) -> Marking:
        i = self._index(route)
        rt = RouteRuntime(RouteStatus.SETTING, self.normal_demands[i], self.reverse_demands[i])
        return self._with_route(m, i, rt)._replace(setting=route)

    def lock_step_enabled(self, m: Marking, route: str, dev: str, position: Position) -> bool:
        i = self._index(route)
        rt = m.routes[i]
        if rt.status is not RouteStatus.SETTING:
            return False
        pending = rt.pending_normal if position is Position.NORMAL else rt.pending_reverse
        if dev not in pending:
            return False
        d = self.device(m, dev)
        return not d.locked_by or d.position is position

    def _fire_lock(self, m: Marking, route: str, dev: str, position: Position) -> Marking:
        i = self._index(route)
        rt = m.routes[i]
        d = self.device(m, dev)
        m = self._with_device(m, dev, Device(position, tuple(sorted(d.locked_by + (route,)))))
        if position is Position.NORMAL:
            rt = rt._replace(pending_normal=tuple(x for x in rt.pending_normal if x != dev))
        else:
            rt = rt._replace(pending_reverse=tuple(x for x in rt.pending_reverse if x != dev))
        return self._with_route(m, i, rt)

    def fire_lock_step_normal(self, m: Marking, route: str, dev: str) -> Marking:
        return self._fire_lock(m, route, dev, Position.NORMAL)

    def fire_lock_step_reverse(self, m: Marking, route: str, dev: str) -> Marking:
        return self._fire_lock(m, route, dev, Position.REVERSE)

    def complete_enabled(self, m: Marking, route: str) -> bool:
        i = self._index(route)
        rt = m.routes[i]
        if rt.status is not RouteStatus.SETTING or rt.pending_normal or rt.pending_reverse:
            return False
        if not self._conflicts_normal(m, i) or not self._tracks_clear(self.occupied(m), i):
            return False
        for dev, pos in self.demand[i].items():
            d = self.device(m, dev)
            if d.position is not pos or route not in d.locked_by:
                return False
        return True

    def fire_complete_setting(self, m: Marking, route: str) -> Marking:
        i = self._index(route)
        rt = RouteRuntime(RouteStatus.SET, stage=ReleaseStage.WAITING_PASSAGE, cleared=True)
        return self._with_route(m, i, rt)._replace(setting=None)

    def cancel_enabled(self, m: Marking) -> bool:
        return m.setting is not None

    def fire_cancel_setting(self, m: Marking) -> Marking:
        """Erase every pending demand of the route being set in one step."""
        route = m.setting
        if route is None:
            raise ValueError("no route setting in progress")
        m = self._drop_locks(m, route)
        return self._with_route(m, self.ridx[route], RouteRuntime())._replace(setting=None)

    # -- approach locking, manual cancel ---------------------------------

    def approach_locked(self, m: Marking, route: str) -> bool:
        i = self._index(route)
        rt = m.routes[i]
        if rt.status is not RouteStatus.SET or not rt.cleared:
            return False
        return self.routes[i].approach in self.occupied(m)

    def signalman_cancel_enabled(self, m: Marking, route: str) -> bool:
        if self.auto:
            return False
        i = self._index(route)
        rt = m.routes[i]
        if rt.status is not RouteStatus.SET or rt.stage is not ReleaseStage.WAITING_PASSAGE:
            return False
        if not rt.cleared or self.approach_locked(m, route):
            return False
        occ = self.occupied(m)
        return not any(t in occ for t in self.routes[i].tracks)

    def fire_signalman_cancel(self, m: Marking, route: str) -> Marking:
        m = self._drop_locks(m, route)
        return self._with_route(m, self.ridx[route], RouteRuntime())

    # -- release, replacement -------------------------------------------

    def release_step_enabled(self, m: Marking, route: str) -> bool:
        i = self._index(route)
        rt = m.routes[i]
        if rt.status is not RouteStatus.SET:
            return False
        rel = self.routes[i].release
        occ = self.occupied(m)
        if rt.stage is ReleaseStage.WAITING_PASSAGE:
            return rel.occ_then_clear in occ and not any(t in occ for t in rel.clear_group)
        if rt.stage is ReleaseStage.PARTIALLY_CLEARED:
            return rel.occ_then_clear not in occ and rel.final_occ in occ
        return False

    def fire_release_step(self, m: Marking, route: str) -> Marking:
        i = self._index(route)
        rt = m.routes[i]
        if rt.stage is ReleaseStage.WAITING_PASSAGE:
            return self._with_route(m, i, rt._replace(stage=ReleaseStage.PARTIALLY_CLEARED))
        m = self._drop_locks(m, route)
        return self._with_route(m, i, RouteRuntime())

    def replacement_enabled(self, m: Marking, signal: str) -> bool:
        occ = self.occupied(m)
        for i in self.routes_by_entry.get(signal, ()):
            rt = m.routes[i]
            if rt.status is RouteStatus.SET and rt.cleared and self.routes[i].tracks[0] in occ:
                return True
        return False

    def fire_signal_replacement(self, m: Marking, signal: str) -> Marking:
        occ = self.occupied(m)
        for i in self.routes_by_entry.get(signal, ()):
            rt = m.routes[i]
            if rt.status is RouteStatus.SET and rt.cleared and self.routes[i].tracks[0] in occ:
                m = self._with_route(m, i, rt._replace(cleared=False))
        return m

    # -- aspects ---------------------------------------------------------

    def aspect_of(self, m: Marking, signal: str, _depth: int = 0) -> Aspect:
        spec = self.layout.signals[signal]
        if spec.kind is SignalKind.WARNER:
            if spec.chain is not None and _depth < 8 and \
                    self.aspect_of(m, spec.chain, _depth + 1) is Aspect.GREEN:
                return Aspect.GREEN
            return Aspect.YELLOW
        cleared = [i for i in self.routes_by_entry.get(signal, ()) if m.routes[i].cleared]
        if not cleared:
            return Aspect.RED
        if spec.kind is SignalKind.STARTER:
            return Aspect.GREEN
        r = self.routes[cleared[0]]
        if r.aspect is AspectRule.ALWAYS_GREEN:
            return Aspect.GREEN
        onward = r.exit or spec.chain
        if onward is not None and onward in self.layout.signals and _depth < 8 and \
                self.aspect_of(m, onward, _depth + 1) is Aspect.GREEN:
            return Aspect.GREEN
        return Aspect.YELLOW

    # -- priority bookkeeping ---------------------------------------------

    @property
    def request_priority(self) -> Priority:
        # a signalman acts asynchronously, like the trains
        return Priority.ROUTE_REQUEST if self.auto else Priority.TRAIN_MOVE
