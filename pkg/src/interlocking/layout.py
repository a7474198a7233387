"""Signalling layout: track circuits, points, derailers, signals and borders.

Track circuits are graph nodes.  Signals sit on the boundary between two
adjacent tracks and face one running direction.  A point is a joint track
plus two leg tracks; ``facing`` names the direction in which a train passes
joint -> leg.

Layout file grammar (UTF-8, ``#`` starts a comment, one record per line)::

    [tracks]
    <track-id>
    [edges]
    <a> <b>                      # Down traffic runs a -> b, Up traffic b -> a
    [points]
    <id> joint=<t> normal=<t> reverse=<t> facing=<up|down>
    [derailers]
    <id> track=<t>
    [signals]
    <id> kind=<warner|home|starter> behind=<t> ahead=<t> facing=<up|down> chain=<sig|->
    [borders]
    <id> track=<t> inbound=<up|down>

Sections may appear in any order and more than once.
"""

from __future__ import annotations

import dataclasses
import enum
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property


class Direction(str, enum.Enum):
    UP = "up"
    DOWN = "down"

    @property
    def opposite(self) -> Direction:
        return Direction.DOWN if self is Direction.UP else Direction.UP


class SignalKind(str, enum.Enum):
    WARNER = "warner"
    HOME = "home"
    STARTER = "starter"


class MoveKind(str, enum.Enum):
    PLAIN = "plain"
    BEHIND_SIGNAL = "behind_signal"
    FRONT_SIGNAL = "front_signal"
    POINT = "point"
    BORDER_EXIT = "border_exit"


class LayoutError(ValueError):
    """Raised for malformed or inconsistent layout files."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class SignalSpec:
    id: str
    kind: SignalKind
    behind: str
    ahead: str
    facing: Direction
    chain: str | None = None


@dataclass(frozen=True)
class PointSpec:
    id: str
    joint: str
    normal: str
    reverse: str
    facing: Direction

    def leg(self, reverse: bool) -> str:
        return self.reverse if reverse else self.normal


@dataclass(frozen=True)
class DerailerSpec:
    id: str
    track: str


@dataclass(frozen=True)
class BorderSpec:
    id: str
    track: str
    inbound: Direction


@dataclass(frozen=True, order=True)
class MoveTemplate:
    """One geometric way for a train to leave a track.

    ``signal`` is the signal on the crossed boundary, if any, and ``front``
    tells whether the train faces it.  Point moves carry the point, the leg
    involved and whether the move is facing (joint -> leg) or trailing.
    """

    dest: str
    kind: MoveKind
    source: str
    direction: Direction
    signal: str | None = None
    front: bool = False
    point: str | None = None
    leg: str | None = None
    facing: bool = False
    border: str | None = None

    def describe(self) -> str:
        if self.kind is MoveKind.BORDER_EXIT:
            return f"{self.source}->exit[{self.border}]"
        text = f"{self.source}->{self.dest}"
        if self.point is not None:
            side = "facing" if self.facing else "trailing"
            text += f"[{self.point}:{side}]"
        if self.signal is not None:
            text += f"[{'front' if self.front else 'behind'}:{self.signal}]"
        return text


@dataclass(frozen=True)
class LayoutGraph:
    tracks: frozenset[str]
    edges: frozenset[tuple[str, str]]
    points: dict[str, PointSpec] = field(default_factory=dict)
    derailers: dict[str, DerailerSpec] = field(default_factory=dict)
    signals: dict[str, SignalSpec] = field(default_factory=dict)
    borders: dict[str, BorderSpec] = field(default_factory=dict)

    # cached_property writes straight into __dict__, which frozen dataclasses allow

    @cached_property
    def _steps(self) -> dict[tuple[str, Direction], list[tuple[str, PointSpec | None, bool]]]:
        steps: dict[tuple[str, Direction], list[tuple[str, PointSpec | None, bool]]] = {}
        for a, b in self.edges:
            steps.setdefault((a, Direction.DOWN), []).append((b, None, False))
            steps.setdefault((b, Direction.UP), []).append((a, None, False))
        for p in self.points.values():
            for leg in (p.normal, p.reverse):
                steps.setdefault((p.joint, p.facing), []).append((leg, p, True))
                steps.setdefault((leg, p.facing.opposite), []).append((p.joint, p, False))
        return steps

    @cached_property
    def _signal_at(self) -> dict[tuple[str, str], SignalSpec]:
        at = {}
        for s in self.signals.values():
            at[(s.behind, s.ahead)] = s
        return at

    @cached_property
    def _derailer_on(self) -> dict[str, str]:
        return {d.track: d.id for d in self.derailers.values()}

    def derailer_on(self, track: str) -> str | None:
        return self._derailer_on.get(track)

    def next_tracks(self, track: str, direction: Direction) -> list[str]:
        return sorted({t for t, _, _ in self._steps.get((track, direction), ())})

    def adjacent(self, a: str, b: str, direction: Direction) -> bool:
        return any(t == b for t, _, _ in self._steps.get((a, direction), ()))

    def point_between(self, a: str, b: str) -> PointSpec | None:
        for p in self.points.values():
            if {a, b} in ({p.joint, p.normal}, {p.joint, p.reverse}):
                return p
        return None

    def signal_between(self, a: str, b: str) -> SignalSpec | None:
        """Signal on the boundary a|b regardless of which side faces it."""
        return self._signal_at.get((a, b)) or self._signal_at.get((b, a))

    def neighbours(self, track: str) -> set[str]:
        out = set()
        for d in Direction:
            out.update(t for t, _, _ in self._steps.get((track, d), ()))
        return out


def _parse_direction(value: str, line: int, col: int) -> Direction:
    try:
        return Direction(value.lower())
    except ValueError:
        raise LayoutError(f"bad direction {value!r}", line, col) from None


def _tokens(text: str):
    """Yield (lineno, [(col, token), ...]) for non-empty, comment-stripped lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = []
        col = 0
        for part in line.split():
            col = line.index(part, col)
            toks.append((col + 1, part))
            col += len(part)
        if toks:
            yield lineno, toks


def _keyvals(toks, allowed: tuple[str, ...], lineno: int) -> dict[str, tuple[str, int]]:
    out: dict[str, tuple[str, int]] = {}
    for col, tok in toks:
        key, sep, value = tok.partition("=")
        if not sep:
            raise LayoutError(f"expected key=value, got {tok!r}", lineno, col)
        if key not in allowed:
            raise LayoutError(f"unknown key {key!r}", lineno, col)
        if key in out:
            raise LayoutError(f"repeated key {key!r}", lineno, col)
        if not value:
            raise LayoutError(f"empty value for {key!r}", lineno, col)
        out[key] = (value, col)
    missing = [k for k in allowed if k not in out]
    if missing:
        raise LayoutError(f"missing key(s): {', '.join(missing)}", lineno, 1)
    return out


SECTIONS = ("tracks", "edges", "points", "derailers", "signals", "borders")


def parse_layout(text: str) -> LayoutGraph:
    section = None
    tracks: dict[str, int] = {}
    edges: list[tuple[str, str, int]] = []
    points: dict[str, PointSpec] = {}
    derailers: dict[str, DerailerSpec] = {}
    signals: dict[str, SignalSpec] = {}
    borders: dict[str, BorderSpec] = {}
    where: dict[tuple[str, str], int] = {}

    def claim(kind: str, ident: str, lineno: int, col: int, table: dict):
        if ident in table:
            raise LayoutError(f"duplicate {kind} id {ident!r}", lineno, col)
        where[(kind, ident)] = lineno

    for lineno, toks in _tokens(text):
        col, first = toks[0]
        if first.startswith("["):
            name = first.strip("[]").lower()
            if not (first.endswith("]") and name in SECTIONS) or len(toks) > 1:
                raise LayoutError(f"unknown section header {first!r}", lineno, col)
            section = name
            continue
        if section is None:
            raise LayoutError("record outside any section", lineno, col)
        rest = toks[1:]
        if section == "tracks":
            if rest:
                raise LayoutError("one track id per line", lineno, rest[0][0])
            claim("track", first, lineno, col, tracks)
            tracks[first] = lineno
        elif section == "edges":
            if len(toks) != 2:
                raise LayoutError("edge needs exactly two track ids", lineno, col)
            edges.append((first, toks[1][1], lineno))
        elif section == "points":
            kv = _keyvals(rest, ("joint", "normal", "reverse", "facing"), lineno)
            claim("point", first, lineno, col, points)
            points[first] = PointSpec(
                first, kv["joint"][0], kv["normal"][0], kv["reverse"][0],
                _parse_direction(kv["facing"][0], lineno, kv["facing"][1]),
            )
        elif section == "derailers":
            kv = _keyvals(rest, ("track",), lineno)
            claim("derailer", first, lineno, col, derailers)
            derailers[first] = DerailerSpec(first, kv["track"][0])
        elif section == "signals":
            kv = _keyvals(rest, ("kind", "behind", "ahead", "facing", "chain"), lineno)
            claim("signal", first, lineno, col, signals)
            kind_s, kcol = kv["kind"]
            try:
                kind = SignalKind(kind_s.lower())
            except ValueError:
                raise LayoutError(f"bad signal kind {kind_s!r}", lineno, kcol) from None
            chain = kv["chain"][0]
            signals[first] = SignalSpec(
                first, kind, kv["behind"][0], kv["ahead"][0],
                _parse_direction(kv["facing"][0], lineno, kv["facing"][1]),
                None if chain == "-" else chain,
            )
        elif section == "borders":
            kv = _keyvals(rest, ("track", "inbound"), lineno)
            claim("border", first, lineno, col, borders)
            borders[first] = BorderSpec(
                first, kv["track"][0], _parse_direction(kv["inbound"][0], lineno, kv["inbound"][1])
            )

    def need_track(t: str, kind: str, ident: str):
        if t not in tracks:
            raise LayoutError(f"{kind} {ident!r} references undeclared track {t!r}",
                              where.get((kind, ident)))

    edge_set = set()
    for a, b, lineno in edges:
        for t in (a, b):
            if t not in tracks:
                raise LayoutError(f"edge references undeclared track {t!r}", lineno)
        if a == b:
            raise LayoutError(f"self-loop edge on {a!r}", lineno)
        if (a, b) in edge_set or (b, a) in edge_set:
            raise LayoutError(f"duplicate edge {a} {b}", lineno)
        edge_set.add((a, b))
    for p in points.values():
        for t in (p.joint, p.normal, p.reverse):
            need_track(t, "point", p.id)
        if len({p.joint, p.normal, p.reverse}) != 3:
            raise LayoutError(f"point {p.id!r} needs three distinct tracks", where[("point", p.id)])
    for d in derailers.values():
        need_track(d.track, "derailer", d.id)
    for b in borders.values():
        need_track(b.track, "border", b.id)

    layout = LayoutGraph(frozenset(tracks), frozenset(edge_set), points, derailers, signals, borders)

    placements = set()
    for s in signals.values():
        line = where[("signal", s.id)]
        need_track(s.behind, "signal", s.id)
        need_track(s.ahead, "signal", s.id)
        if not layout.adjacent(s.behind, s.ahead, s.facing):
            raise LayoutError(
                f"signal {s.id!r}: {s.ahead!r} is not the next track after {s.behind!r} running {s.facing.value}",
                line)
        if (s.behind, s.ahead, s.facing) in placements:
            raise LayoutError(f"signal {s.id!r} shares its placement with another signal", line)
        placements.add((s.behind, s.ahead, s.facing))
        if s.chain is not None:
            if s.chain not in signals:
                raise LayoutError(f"signal {s.id!r} chains to undeclared signal {s.chain!r}", line)
            want = {SignalKind.WARNER: SignalKind.HOME, SignalKind.HOME: SignalKind.STARTER}.get(s.kind)
            if want is None or signals[s.chain].kind is not want:
                raise LayoutError(f"signal {s.id!r} ({s.kind.value}) cannot chain to "
                                  f"{s.chain!r} ({signals[s.chain].kind.value})", line)
    seen_derail = {}
    for d in derailers.values():
        if d.track in seen_derail:
            raise LayoutError(f"derailers {seen_derail[d.track]!r} and {d.id!r} share track {d.track!r}",
                              where[("derailer", d.id)])
        seen_derail[d.track] = d.id
    _check_connected(layout)
    return layout


def _check_connected(layout: LayoutGraph) -> None:
    if not layout.tracks:
        raise LayoutError("layout declares no tracks")
    start = min(layout.tracks)
    seen = {start}
    todo = deque([start])
    while todo:
        t = todo.popleft()
        for n in layout.neighbours(t):
            if n not in seen:
                seen.add(n)
                todo.append(n)
    if seen != layout.tracks:
        stray = sorted(layout.tracks - seen)
        raise LayoutError(f"layout graph is disconnected; unreachable from {start!r}: {', '.join(stray)}")


def serialize_layout(layout: LayoutGraph) -> str:
    out = ["[tracks]"]
    out += sorted(layout.tracks)
    out.append("[edges]")
    out += [f"{a} {b}" for a, b in sorted(layout.edges)]
    out.append("[points]")
    for p in sorted(layout.points.values(), key=lambda p: p.id):
        out.append(f"{p.id} joint={p.joint} normal={p.normal} reverse={p.reverse} facing={p.facing.value}")
    out.append("[derailers]")
    for d in sorted(layout.derailers.values(), key=lambda d: d.id):
        out.append(f"{d.id} track={d.track}")
    out.append("[signals]")
    for s in sorted(layout.signals.values(), key=lambda s: s.id):
        out.append(f"{s.id} kind={s.kind.value} behind={s.behind} ahead={s.ahead} "
                   f"facing={s.facing.value} chain={s.chain or '-'}")
    out.append("[borders]")
    for b in sorted(layout.borders.values(), key=lambda b: b.id):
        out.append(f"{b.id} track={b.track} inbound={b.inbound.value}")
    return "\n".join(out) + "\n"


def remove_signal(layout: LayoutGraph, signal_id: str) -> LayoutGraph:
    """Copy of ``layout`` without ``signal_id``; chains pointing at it are cleared."""
    if signal_id not in layout.signals:
        raise KeyError(f"unknown signal {signal_id!r}")
    signals = {}
    for sid, s in layout.signals.items():
        if sid == signal_id:
            continue
        signals[sid] = dataclasses.replace(s, chain=None) if s.chain == signal_id else s
    return dataclasses.replace(layout, signals=signals)


def moves_from(layout: LayoutGraph, track: str, direction: Direction) -> list[MoveTemplate]:
    if track not in layout.tracks:
        raise KeyError(f"unknown track {track!r}")
    moves = []
    for dest, point, facing in layout._steps.get((track, direction), ()):
        sig = layout.signal_between(track, dest)
        front = sig is not None and sig.facing is direction
        if point is not None:
            kind = MoveKind.POINT
        elif sig is None:
            kind = MoveKind.PLAIN
        else:
            kind = MoveKind.FRONT_SIGNAL if front else MoveKind.BEHIND_SIGNAL
        leg = None
        if point is not None:
            leg = dest if facing else track
        moves.append(MoveTemplate(
            dest=dest, kind=kind, source=track, direction=direction,
            signal=sig.id if sig else None, front=front,
            point=point.id if point else None, leg=leg, facing=facing,
        ))
    for b in sorted(layout.borders.values(), key=lambda b: b.id):
        if b.track == track and b.inbound is direction.opposite:
            moves.append(MoveTemplate(dest="", kind=MoveKind.BORDER_EXIT, source=track,
                                      direction=direction, border=b.id))
    moves.sort(key=lambda m: (m.dest, m.kind.value, m.border or ""))
    return moves
