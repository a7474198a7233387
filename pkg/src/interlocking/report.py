"""Rendering of exploration results, plus a reader for the machine format.

Machine format, one record per line::

    nodes=<n> arcs=<n> terminals=<n> accidents=<n> incomplete=<0|1>
    scenario=<name> auto=<on|off> priorities=<on|off> flank=<on|off> remove_signal=<ids|-> derailments=<n>
    terminal <digest> class=<empty|deadlock|accident>
    accident <kind> trains=<t,...> at=<track> marking=<digest> trace=<t1;t2;...|->
    elapsed=<seconds>

``accidents`` counts accident markings.  Everything except the final
``elapsed`` line is a deterministic function of the scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .explorer import FlankVerdict, StateSpaceReport, TerminalClasses, classify_terminals, trace_to
from .layout import SignalKind
from .state import Marking

ONOFF = {True: "on", False: "off"}


class ReportFormatError(ValueError):
    pass


@dataclass
class MachineReport:
    nodes: int
    arcs: int
    accidents: int
    incomplete: bool
    scenario: str
    modes: dict[str, str]
    derailments: int
    terminals: list[tuple[str, str]] = field(default_factory=list)
    accident_records: list[dict[str, str]] = field(default_factory=list)
    elapsed: float = 0.0

    def render(self, with_elapsed: bool = True) -> str:
        lines = [
            f"nodes={self.nodes} arcs={self.arcs} terminals={len(self.terminals)} "
            f"accidents={self.accidents} incomplete={int(self.incomplete)}",
            f"scenario={self.scenario} " + " ".join(f"{k}={v}" for k, v in self.modes.items())
            + f" derailments={self.derailments}",
        ]
        lines += [f"terminal {d} class={c}" for d, c in self.terminals]
        lines += [f"accident {a['kind']} trains={a['trains']} at={a['at']} marking={a['marking']} "
                  f"trace={a['trace']}" for a in self.accident_records]
        if with_elapsed:
            lines.append(f"elapsed={self.elapsed:.4f}")
        return "\n".join(lines) + "\n"


def _modes(report: StateSpaceReport) -> dict[str, str]:
    m = report.modes
    return {"auto": ONOFF[m.auto], "priorities": ONOFF[m.priorities], "flank": ONOFF[m.flank],
            "remove_signal": ",".join(m.removed_signals) or "-"}


def machine_report(report: StateSpaceReport, classes: TerminalClasses | None = None) -> MachineReport:
    classes = classes or classify_terminals(report)
    kind_of = {d: "empty" for d in classes.empty_of_trains}
    kind_of.update({d: "deadlock" for d in classes.safe_deadlock})
    kind_of.update({d: "accident" for d in classes.accident_terminal})
    records = []
    for rec, d in report.accidents:
        trace = ";".join(map(str, trace_to(report, d))) if report._nodes else ""
        records.append({"kind": rec.kind.value, "trains": ",".join(rec.trains), "at": rec.at,
                        "marking": d, "trace": trace or "-"})
    return MachineReport(
        nodes=report.nodes, arcs=report.arcs, accidents=report.accident_markings,
        incomplete=report.incomplete, scenario=report.scenario, modes=_modes(report),
        derailments=report.derailment_markings,
        terminals=[(d, kind_of[d]) for d in report.terminals],
        accident_records=records, elapsed=report.elapsed,
    )


def _kv(tokens: list[str], lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ReportFormatError(f"line {lineno}: expected key=value, got {tok!r}")
        out[key] = value
    return out


def read_machine_report(text: str) -> MachineReport:
    lines = text.splitlines()
    if len(lines) < 2:
        raise ReportFormatError("machine report needs a header and a scenario line")
    head = _kv(lines[0].split(), 1)
    scen = _kv(lines[1].split(), 2)
    try:
        report = MachineReport(
            nodes=int(head["nodes"]), arcs=int(head["arcs"]), accidents=int(head["accidents"]),
            incomplete=head["incomplete"] == "1", scenario=scen.pop("scenario"),
            derailments=int(scen.pop("derailments")), modes=scen,
        )
        declared_terminals = int(head["terminals"])
    except (KeyError, ValueError) as exc:
        raise ReportFormatError(f"bad header: {exc}") from None
    for lineno, line in enumerate(lines[2:], start=3):
        word, *rest = line.split()
        if word == "terminal" and len(rest) == 2:
            report.terminals.append((rest[0], _kv(rest[1:], lineno)["class"]))
        elif word == "accident" and len(rest) == 5:
            rec = {"kind": rest[0]}
            rec.update(_kv(rest[1:], lineno))
            report.accident_records.append(rec)
        elif word.startswith("elapsed=") and not rest:
            report.elapsed = float(word[len("elapsed="):])
        else:
            raise ReportFormatError(f"line {lineno}: cannot parse {line!r}")
    if declared_terminals != len(report.terminals):
        raise ReportFormatError("terminal count does not match terminal records")
    return report


def render_text(report: StateSpaceReport, classes: TerminalClasses | None = None) -> str:
    classes = classes or classify_terminals(report)
    m = _modes(report)
    out = [
        f"scenario {report.scenario} ({' '.join(f'{k}={v}' for k, v in m.items())})",
        f"state space: {report.nodes} nodes, {report.arcs} arcs"
        + (" (INCOMPLETE: state cap reached)" if report.incomplete else ""),
        f"terminal markings: {len(report.terminals)} (empty of trains {len(classes.empty_of_trains)}, "
        f"safe deadlock {len(classes.safe_deadlock)}, accident {len(classes.accident_terminal)})",
        f"accident markings: {report.accident_markings} (with derailment {report.derailment_markings})",
    ]
    if report.accidents:
        out.append("accidents (first occurrence, shortest trace):")
        for rec, d in report.accidents:
            out.append(f"  {rec} in marking {d}")
            for k, tr in enumerate(trace_to(report, d), start=1):
                out.append(f"    {k:3d}. {tr}")
    out.append(f"elapsed: {report.elapsed:.2f} s")
    return "\n".join(out) + "\n"


def _approach_tracks(report: StateSpaceReport) -> set[str]:
    """Tracks in front of a stop signal, where trains wait for a route."""
    return {s.behind for s in report.model.layout.signals.values() if s.kind is not SignalKind.WARNER}


def _occupancy_cell(m: Marking, tracks) -> str:
    cells = [f"{t.track}:{t.id}({t.direction.value})" for t in sorted(m.trains, key=lambda t: t.track)
             if t.track in tracks]
    return " ".join(cells) or "-"


def render_terminal_table(report: StateSpaceReport, classes: TerminalClasses | None = None) -> str:
    """One row per safe deadlock: where the trains wait in front of the stop signals."""
    classes = classes or classify_terminals(report)
    if not classes.safe_deadlock:
        return "no deadlocks\n"
    waiting = _approach_tracks(report)
    rows = []
    stray = False
    for k, d in enumerate(classes.safe_deadlock, start=1):
        m = report.terminal_markings[d]
        rows.append(f"{k:4d}  {d}  {_occupancy_cell(m, waiting)}")
        others = [t for t in m.trains if t.track not in waiting]
        if others:
            stray = True
            rows.append(f"{'':4}  {'':24}  elsewhere: {_occupancy_cell(m, {t.track for t in others})}")
    out = [f"safe deadlocks: {len(classes.safe_deadlock)}",
           f"{'no.':>4}  {'marking':24}  trains in front of stop signals"]
    out += rows
    if not stray:
        out.append("in all listed markings the other tracks are unoccupied")
    return "\n".join(out) + "\n"


def render_flank_verdict(verdict: FlankVerdict) -> str:
    removed = ",".join(verdict.with_flank.modes.removed_signals)
    out = [f"flank check {verdict.with_flank.scenario} (signal removed: {removed}): {verdict.verdict}"]
    for label, r in (("flank on ", verdict.with_flank), ("flank off", verdict.without_flank)):
        counts = ", ".join(f"{k} {v}" for k, v in r.accident_counts().items())
        out.append(f"  {label}: {r.nodes} nodes, {r.accident_markings} accident markings ({counts})"
                   + (" INCOMPLETE" if r.incomplete else ""))
    if verdict.verdict == "FAIL":
        culprit = verdict.with_flank
    elif verdict.verdict == "PASS":
        culprit = verdict.without_flank
    else:
        culprit = None
    if culprit is not None and culprit.accidents:
        rec, d = culprit.accidents[0]
        out.append(f"  shortest trace to {rec}:")
        out += [f"    {k:3d}. {tr}" for k, tr in enumerate(trace_to(culprit, d), start=1)]
    return "\n".join(out) + "\n"
