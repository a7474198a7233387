"""Global state (marking) representation shared by kernel, motion and explorer.

A marking is a tree of tuples, so equality and hashing are structural.  All
per-element tuples are kept in a fixed order (sorted ids), so the tree with
enum members replaced by their values is a canonical serialization;
:func:`digest` hashes that.
"""

from __future__ import annotations

import enum
import hashlib
from typing import NamedTuple

from .layout import Direction, MoveTemplate
from .table import Position


class RouteStatus(enum.IntEnum):
    NORMAL = 0
    SETTING = 1
    SET = 2


class ReleaseStage(enum.IntEnum):
    INACTIVE = 0
    WAITING_PASSAGE = 1
    PARTIALLY_CLEARED = 2


class Aspect(str, enum.Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"


class AccidentKind(str, enum.Enum):
    HEAD_TO_TAIL_HEAD_TO_HEAD = "H2T_H2H"
    HEAD_TO_SIDE = "Head2Side"
    DERAILMENT = "Derailment"


class Priority(enum.IntEnum):
    """Only the order matters; higher fires first under global priorities."""

    CANCEL = 0
    TRAIN_MOVE = 1
    ROUTE_REQUEST = 2
    COMPLETE = 3
    LOCK_REVERSE = 4
    LOCK_NORMAL = 5
    INTERLOCK_INTERNAL = 6


class Train(NamedTuple):
    id: str
    track: str
    direction: Direction


class Device(NamedTuple):
    position: Position = Position.NORMAL
    locked_by: tuple[str, ...] = ()


class RouteRuntime(NamedTuple):
    status: RouteStatus = RouteStatus.NORMAL
    pending_normal: tuple[str, ...] = ()
    pending_reverse: tuple[str, ...] = ()
    stage: ReleaseStage = ReleaseStage.INACTIVE
    cleared: bool = False


class AccidentRecord(NamedTuple):
    kind: AccidentKind
    trains: tuple[str, ...]
    at: str

    def __str__(self) -> str:
        return f"{self.kind.value}({','.join(self.trains)}@{self.at})"


class Marking(NamedTuple):
    trains: tuple[Train, ...]
    points: tuple[Device, ...]
    derailers: tuple[Device, ...]
    routes: tuple[RouteRuntime, ...]
    setting: str | None
    spawned: tuple[int, ...]
    departed: tuple[int, ...]
    accidents: tuple[AccidentRecord, ...] = ()


class TransitionInstance(NamedTuple):
    kind: str
    args: tuple[str, ...]
    priority: Priority
    move: MoveTemplate | None = None

    def __str__(self) -> str:
        if self.move is not None:
            return f"move({self.args[0]}:{self.move.describe()})"
        return f"{self.kind}({','.join(self.args)})"


def _plain(x):
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, tuple):
        return tuple(_plain(v) for v in x)
    return x


def digest(m: Marking) -> str:
    """Stable hash of the canonical form (enum members reduced to their values)."""
    return hashlib.blake2b(repr(_plain(m)).encode(), digest_size=12).hexdigest()


def frozen_trains(m: Marking) -> frozenset[str]:
    return frozenset(t for a in m.accidents for t in a.trains)


def occupancy(m: Marking) -> dict[str, list[str]]:
    occ: dict[str, list[str]] = {}
    for t in m.trains:
        occ.setdefault(t.track, []).append(t.id)
    return occ
