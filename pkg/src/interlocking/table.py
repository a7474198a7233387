"""Interlocking tables: route records, flank requirements, validation.

Table file grammar (one record per line, ``#`` comments)::

    route <id> entry=<sig> exit=<sig|-> tracks=<t,...> points=<p:N|R,...>
          conflicts=<r,...> approach=<t> release_clear=<t,...>
          release_occ_clear=<t> release_final=<t> aspect=<green_if_exit|always_green>
    flank <route-id> points=<p:N|R,...> tracks_clear=<t,...> derailers=<d,...>

A route record is a single line.  ``-`` stands for an empty list.  In
``points=`` a derailer id may appear too: ``N`` demands the derailing
position, ``R`` the pass position.  ``flank`` keys are all optional.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field

from .layout import LayoutGraph


class Position(str, enum.Enum):
    """Device position.  For derailers NORMAL is *derail* and REVERSE is *pass*."""

    NORMAL = "N"
    REVERSE = "R"


class AspectRule(str, enum.Enum):
    GREEN_IF_EXIT = "green_if_exit"
    ALWAYS_GREEN = "always_green"


class TableError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, order=True)
class PointDemand:
    point: str
    position: Position

    def __str__(self) -> str:
        return f"{self.point}:{self.position.value}"


@dataclass(frozen=True)
class ReleaseSpec:
    clear_group: tuple[str, ...]
    occ_then_clear: str
    final_occ: str

    def tracks(self) -> set[str]:
        return set(self.clear_group) | {self.occ_then_clear, self.final_occ}


@dataclass(frozen=True)
class FlankSpec:
    points: tuple[PointDemand, ...] = ()
    tracks_clear: tuple[str, ...] = ()
    derailers: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (self.points or self.tracks_clear or self.derailers)

    def demands(self) -> tuple[PointDemand, ...]:
        """Flank devices as demands; flank derailers always want the derail position."""
        return self.points + tuple(PointDemand(d, Position.NORMAL) for d in self.derailers)


@dataclass(frozen=True)
class RouteSpec:
    id: str
    entry: str
    exit: str | None
    tracks: tuple[str, ...]
    points: tuple[PointDemand, ...]
    conflicts: frozenset[str]
    approach: str
    release: ReleaseSpec
    aspect: AspectRule


@dataclass(frozen=True)
class InterlockingTable:
    routes: tuple[RouteSpec, ...]
    flank: dict[str, FlankSpec] = field(default_factory=dict)

    def route(self, rid: str) -> RouteSpec:
        for r in self.routes:
            if r.id == rid:
                return r
        raise KeyError(f"unknown route {rid!r}")

    def flank_of(self, rid: str) -> FlankSpec:
        return self.flank.get(rid, FlankSpec())

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.routes]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "ERROR" or "WARNING"
    code: str
    route: str | None
    message: str

    def __str__(self) -> str:
        where = f" [{self.route}]" if self.route else ""
        return f"{self.severity} {self.code}{where}: {self.message}"


def _split_list(value: str) -> list[str]:
    if value == "-":
        return []
    return [v for v in value.split(",") if v]


def _demands(value: str, line: int) -> tuple[PointDemand, ...]:
    out = []
    for item in _split_list(value):
        pid, sep, pos = item.rpartition(":")
        if not sep or pos not in ("N", "R") or not pid:
            raise TableError(f"bad point demand {item!r} (want <id>:N or <id>:R)", line)
        out.append(PointDemand(pid, Position(pos)))
    return tuple(out)


ROUTE_KEYS = ("entry", "exit", "tracks", "points", "conflicts", "approach",
              "release_clear", "release_occ_clear", "release_final", "aspect")
FLANK_KEYS = ("points", "tracks_clear", "derailers")


def _fields(parts: list[str], allowed: tuple[str, ...], line: int, required: bool) -> dict[str, str]:
    kv = {}
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep:
            raise TableError(f"expected key=value, got {part!r}", line)
        if key not in allowed:
            raise TableError(f"unknown key {key!r}", line)
        if key in kv:
            raise TableError(f"repeated key {key!r}", line)
        kv[key] = value
    if required:
        missing = [k for k in allowed if k not in kv]
        if missing:
            raise TableError(f"missing key(s): {', '.join(missing)}", line)
    return kv


def parse_table(text: str) -> InterlockingTable:
    routes: dict[str, RouteSpec] = {}
    flank: dict[str, FlankSpec] = {}
    flank_lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        word = parts[0]
        if word not in ("route", "flank") or len(parts) < 2:
            raise TableError(f"expected 'route <id> ...' or 'flank <id> ...', got {raw.strip()!r}", lineno)
        rid = parts[1]
        if word == "route":
            if rid in routes:
                raise TableError(f"duplicate route id {rid!r}", lineno)
            kv = _fields(parts[2:], ROUTE_KEYS, lineno, required=True)
            try:
                aspect = AspectRule(kv["aspect"])
            except ValueError:
                raise TableError(f"bad aspect rule {kv['aspect']!r}", lineno) from None
            conflicts = frozenset(_split_list(kv["conflicts"]))
            if rid in conflicts:
                raise TableError(f"route {rid!r}: self-conflict", lineno)
            tracks = tuple(_split_list(kv["tracks"]))
            if not tracks:
                raise TableError(f"route {rid!r} has no tracks", lineno)
            routes[rid] = RouteSpec(
                id=rid,
                entry=kv["entry"],
                exit=None if kv["exit"] == "-" else kv["exit"],
                tracks=tracks,
                points=_demands(kv["points"], lineno),
                conflicts=conflicts,
                approach=kv["approach"],
                release=ReleaseSpec(tuple(_split_list(kv["release_clear"])),
                                    kv["release_occ_clear"], kv["release_final"]),
                aspect=aspect,
            )
        else:
            if rid in flank:
                raise TableError(f"duplicate flank record for {rid!r}", lineno)
            kv = _fields(parts[2:], FLANK_KEYS, lineno, required=False)
            flank[rid] = FlankSpec(
                points=_demands(kv.get("points", "-"), lineno),
                tracks_clear=tuple(_split_list(kv.get("tracks_clear", "-"))),
                derailers=tuple(_split_list(kv.get("derailers", "-"))),
            )
            flank_lines[rid] = lineno
    for r in routes.values():
        for c in sorted(r.conflicts):
            if c not in routes:
                raise TableError(f"route {r.id!r}: unresolvable conflict reference {c!r}")
    for rid, line in flank_lines.items():
        if rid not in routes:
            raise TableError(f"flank record for unknown route {rid!r}", line)
    return InterlockingTable(tuple(routes.values()), flank)


def _join(items) -> str:
    items = list(items)
    return ",".join(items) if items else "-"


def serialize_table(table: InterlockingTable) -> str:
    out = []
    for r in table.routes:
        out.append(
            f"route {r.id} entry={r.entry} exit={r.exit or '-'} tracks={_join(r.tracks)} "
            f"points={_join(map(str, r.points))} conflicts={_join(sorted(r.conflicts))} "
            f"approach={r.approach} release_clear={_join(r.release.clear_group)} "
            f"release_occ_clear={r.release.occ_then_clear} release_final={r.release.final_occ} "
            f"aspect={r.aspect.value}")
    for rid in table.ids:
        f = table.flank.get(rid)
        if f is None:
            continue
        out.append(f"flank {rid} points={_join(map(str, f.points))} "
                   f"tracks_clear={_join(f.tracks_clear)} derailers={_join(f.derailers)}")
    return "\n".join(out) + "\n"


def strip_flank(table: InterlockingTable) -> InterlockingTable:
    return dataclasses.replace(table, flank={})


def conflicts_closed(table: InterlockingTable, a: str, b: str) -> bool:
    ra, rb = table.route(a), table.route(b)
    if a == b:
        return False
    return b in ra.conflicts or a in rb.conflicts


def validate_table(table: InterlockingTable, layout: LayoutGraph) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def err(code, rid, msg):
        diags.append(Diagnostic("ERROR", code, rid, msg))

    devices = set(layout.points) | set(layout.derailers)
    for r in table.routes:
        dangling = False
        for t in (*r.tracks, r.approach, *r.release.tracks()):
            if t not in layout.tracks:
                err("dangling-id", r.id, f"unknown track {t!r}")
                dangling = True
        for d in r.points:
            if d.point not in devices:
                err("dangling-id", r.id, f"unknown point or derailer {d.point!r}")
                dangling = True
        entry = layout.signals.get(r.entry)
        if entry is None:
            err("dangling-id", r.id, f"unknown entry signal {r.entry!r}")
            dangling = True
        if r.exit is not None and r.exit not in layout.signals:
            err("dangling-id", r.id, f"unknown exit signal {r.exit!r}")
            dangling = True
        flank = table.flank_of(r.id)
        for d in flank.points:
            if d.point not in layout.points:
                err("dangling-id", r.id, f"unknown flank point {d.point!r}")
                dangling = True
        for t in flank.tracks_clear:
            if t not in layout.tracks:
                err("dangling-id", r.id, f"unknown flank track {t!r}")
                dangling = True
        for d in flank.derailers:
            if d not in layout.derailers:
                err("dangling-id", r.id, f"unknown flank derailer {d!r}")
                dangling = True
        if dangling:
            continue

        if entry.behind != r.approach:
            err("approach", r.id, f"approach track {r.approach!r} is not behind entry signal "
                                  f"{r.entry!r} (behind={entry.behind!r})")
        if r.tracks[0] != entry.ahead:
            err("contiguity", r.id, f"first route track {r.tracks[0]!r} is not ahead of entry "
                                    f"signal {r.entry!r}")
        demanded = {d.point: d.position for d in r.points}
        if len(demanded) != len(r.points):
            err("duplicate-demand", r.id, "a device is demanded twice")
        crossed = set()
        # the entry boundary counts: a route may start by trailing over a point
        path = (r.approach, *r.tracks)
        for k, (a, b) in enumerate(zip(path, path[1:])):
            if k > 0 and not layout.adjacent(a, b, entry.facing):
                err("contiguity", r.id, f"{b!r} does not follow {a!r} running {entry.facing.value}")
                continue
            p = layout.point_between(a, b)
            if p is None:
                continue
            crossed.add(p.id)
            leg = b if a == p.joint else a
            want = "R" if leg == p.reverse else "N"
            got = demanded.get(p.id)
            if got is None:
                err("contiguity", r.id, f"route crosses point {p.id!r} without demanding a position")
            elif got.value != want:
                err("contiguity", r.id, f"route runs over the {'reverse' if want == 'R' else 'normal'} "
                                        f"leg of {p.id!r} but demands {p.id}:{got.value}")
        for pid in demanded:
            if pid in layout.points and pid not in crossed:
                err("contiguity", r.id, f"point {pid!r} is demanded but not on the route")
            if pid in layout.derailers and layout.derailers[pid].track not in r.tracks:
                err("contiguity", r.id, f"derailer {pid!r} is demanded but not on the route")
        for d in layout.derailers.values():
            if d.track in r.tracks:
                if demanded.get(d.id) is not Position.REVERSE:
                    err("derailer", r.id, f"route runs over derailer {d.id!r} without demanding {d.id}:R")
        if r.exit is not None and layout.signals[r.exit].behind != r.tracks[-1]:
            err("exit", r.id, f"exit signal {r.exit!r} is not at the end of the route")

        rel = r.release
        parts = [set(rel.clear_group), {rel.occ_then_clear}, {rel.final_occ}]
        if len(rel.clear_group) != len(parts[0]) or sum(map(len, parts)) != len(set().union(*parts)):
            err("release", r.id, "release parts overlap")
        outside = sorted(rel.tracks() - set(r.tracks))
        if outside:
            err("release", r.id, f"release tracks outside route: {', '.join(outside)}")

        own = set(r.tracks)
        for d in flank.points:
            if d.point in demanded:
                err("flank-on-route", r.id, f"flank element on own route: point {d.point!r}")
        for t in flank.tracks_clear:
            if t in own:
                err("flank-on-route", r.id, f"flank element on own route: track {t!r}")
        for d in flank.derailers:
            if d in demanded or layout.derailers[d].track in own:
                err("flank-on-route", r.id, f"flank element on own route: derailer {d!r}")

    ids = set(table.ids)
    for r in table.routes:
        for c in sorted(r.conflicts):
            if c in ids and r.id not in table.route(c).conflicts:
                diags.append(Diagnostic("WARNING", "asymmetric-conflict", r.id,
                                        f"{r.id!r} lists {c!r} as conflicting but {c!r} omits {r.id!r}"))
    return diags
