"""Scenario files: which station, which trains, which operating modes.

Grammar (one directive per line, ``#`` comments; paths relative to the file)::

    layout <path>
    table <path>
    occupy <track> <train> dir=<up|down>
    border <border-id> queue=<t1,t2,...>
    mode auto=<on|off> priorities=<on|off> flank=<on|off> remove_signal=<id,...|->

``mode`` keys are optional; the defaults are auto, priorities and flank on
with no signal removed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .kernel import StationModel
from .layout import Direction, LayoutGraph, parse_layout, remove_signal
from .state import Marking
from .table import InterlockingTable, parse_table, strip_flank


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Modes:
    auto: bool = True
    priorities: bool = True
    flank: bool = True
    removed_signals: tuple[str, ...] = ()

    def describe(self) -> str:
        onoff = {True: "on", False: "off"}
        removed = ",".join(self.removed_signals) or "-"
        return (f"auto={onoff[self.auto]} priorities={onoff[self.priorities]} "
                f"flank={onoff[self.flank]} remove_signal={removed}")


@dataclass(frozen=True)
class Scenario:
    layout: LayoutGraph
    table: InterlockingTable
    occupancy: tuple[tuple[str, str, Direction], ...] = ()
    queues: dict[str, tuple[str, ...]] = field(default_factory=dict)
    modes: Modes = Modes()
    name: str = "scenario"

    def with_modes(self, **changes) -> Scenario:
        return dataclasses.replace(self, modes=dataclasses.replace(self.modes, **changes))

    def effective_layout(self) -> LayoutGraph:
        layout = self.layout
        for sid in self.modes.removed_signals:
            layout = remove_signal(layout, sid)
        return layout

    def effective_table(self) -> InterlockingTable:
        """Table as the kernel sees it under the current modes.

        Routes whose entry signal was removed cannot be set any more and are
        dropped, together with references to them; a removed exit signal is
        forgotten.
        """
        table = self.table if self.modes.flank else strip_flank(self.table)
        removed = set(self.modes.removed_signals)
        if not removed:
            return table
        dropped = {r.id for r in table.routes if r.entry in removed}
        routes = tuple(
            dataclasses.replace(r, conflicts=r.conflicts - dropped,
                                exit=None if r.exit in removed else r.exit)
            for r in table.routes if r.id not in dropped
        )
        flank = {k: v for k, v in table.flank.items() if k not in dropped}
        return InterlockingTable(routes, flank)

    def build(self) -> tuple[StationModel, Marking]:
        self.check()
        model = StationModel(self.effective_layout(), self.effective_table(),
                             auto=self.modes.auto, queues=self.queues)
        return model, model.initial_marking((train, track, d) for track, train, d in self.occupancy)

    def check(self) -> None:
        tracks = [t for t, _, _ in self.occupancy]
        for t in tracks:
            if t not in self.layout.tracks:
                raise ScenarioError(f"occupy: unknown track {t!r}")
        if len(set(tracks)) != len(tracks):
            raise ScenarioError("occupy: two trains on one track")
        ids = [tr for _, tr, _ in self.occupancy] + [t for q in self.queues.values() for t in q]
        if len(set(ids)) != len(ids):
            raise ScenarioError("train ids must be unique across occupancy and border queues")
        for b in self.queues:
            if b not in self.layout.borders:
                raise ScenarioError(f"border: unknown border {b!r}")
        for s in self.modes.removed_signals:
            if s not in self.layout.signals:
                raise ScenarioError(f"remove_signal: unknown signal {s!r}")


def _onoff(value: str, key: str) -> bool:
    if value not in ("on", "off"):
        raise ScenarioError(f"mode {key} must be on or off, got {value!r}")
    return value == "on"


def parse_scenario(text: str, base: Path | str = ".", name: str = "scenario") -> Scenario:
    base = Path(base)
    layout_path = table_path = None
    occupancy = []
    queues: dict[str, tuple[str, ...]] = {}
    modes = Modes()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        word, args = parts[0], parts[1:]
        try:
            if word == "layout" and len(args) == 1:
                layout_path = base / args[0]
            elif word == "table" and len(args) == 1:
                table_path = base / args[0]
            elif word == "occupy" and len(args) == 3 and args[2].startswith("dir="):
                occupancy.append((args[0], args[1], Direction(args[2][4:])))
            elif word == "border" and len(args) == 2 and args[1].startswith("queue="):
                if args[0] in queues:
                    raise ScenarioError(f"border {args[0]!r} given twice")
                value = args[1][6:]
                queues[args[0]] = tuple(v for v in value.split(",") if v) if value != "-" else ()
            elif word == "mode":
                for kv in args:
                    key, _, value = kv.partition("=")
                    if key in ("auto", "priorities", "flank"):
                        modes = dataclasses.replace(modes, **{key: _onoff(value, key)})
                    elif key == "remove_signal":
                        removed = () if value in ("", "-") else tuple(value.split(","))
                        modes = dataclasses.replace(modes, removed_signals=removed)
                    else:
                        raise ScenarioError(f"unknown mode key {key!r}")
            else:
                raise ScenarioError(f"cannot parse {raw.strip()!r}")
        except ScenarioError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    if layout_path is None or table_path is None:
        raise ScenarioError("scenario needs both 'layout' and 'table' lines")
    scenario = Scenario(
        layout=parse_layout(layout_path.read_text(encoding="utf-8")),
        table=parse_table(table_path.read_text(encoding="utf-8")),
        occupancy=tuple(occupancy),
        queues=queues,
        modes=modes,
        name=name,
    )
    scenario.check()
    return scenario


def load_scenario(path: Path | str) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent, name=path.stem)
