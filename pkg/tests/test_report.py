from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, scenario
from interlocking.explorer import explore, flank_check
from interlocking.report import (
    MachineReport,
    ReportFormatError,
    machine_report,
    read_machine_report,
    render_flank_verdict,
    render_terminal_table,
    render_text,
)


def test_terminal_table_golden():
    report = explore(scenario("mini_case_c2"))
    expected = (GOLDEN / "terminal_table_mini_case_c2.txt").read_text(encoding="utf-8")
    assert render_terminal_table(report) == expected


def test_terminal_table_rows():
    text = render_terminal_table(explore(scenario("mini_case_c2")))
    assert text.startswith("safe deadlocks: 20\n")
    assert text.rstrip().endswith("in all listed markings the other tracks are unoccupied")


def test_no_deadlocks_line():
    assert render_terminal_table(explore(scenario("tiny_loop_basic"))) == "no deadlocks\n"


@pytest.mark.parametrize("name, flank", [("mini_case_b", True), ("mini_flank_17", False)])
def test_machine_round_trip(name, flank):
    text = machine_report(explore(scenario(name).with_modes(flank=flank))).render()
    parsed = read_machine_report(text)
    assert parsed.render() == text


def test_machine_header_fields():
    report = explore(scenario("mini_flank_17").with_modes(flank=False))
    parsed = read_machine_report(machine_report(report).render())
    assert (parsed.nodes, parsed.arcs, parsed.accidents, parsed.incomplete) == (
        report.nodes, report.arcs, report.accident_markings, False)
    assert parsed.modes == {"auto": "on", "priorities": "on", "flank": "off", "remove_signal": "17"}
    kinds = {a["kind"] for a in parsed.accident_records}
    assert "Head2Side" in kinds
    assert all(a["trace"] != "-" for a in parsed.accident_records)


@pytest.mark.parametrize("text", [
    "",
    "nodes=1 arcs=0 terminals=1 accidents=0 incomplete=0\nscenario=x derailments=0\n",
    "nodes=1 arcs=0 terminals=0 accidents=0 incomplete=0\nscenario=x derailments=0\nbogus line\n",
    "nodes=one arcs=0 terminals=0 accidents=0 incomplete=0\nscenario=x derailments=0\n",
])
def test_reader_rejects(text):
    with pytest.raises(ReportFormatError):
        read_machine_report(text)


token = st.text(alphabet="abcdef0123456789-()", min_size=1, max_size=10)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 100), st.booleans(),
    st.lists(st.tuples(token, st.sampled_from(["empty", "deadlock", "accident"])), max_size=5),
    st.lists(st.fixed_dictionaries({"kind": st.sampled_from(["H2T_H2H", "Head2Side", "Derailment"]),
                                    "trains": token, "at": token, "marking": token, "trace": token}),
             max_size=3),
)
def test_round_trip_property(nodes, arcs, acc, incomplete, terminals, records):
    report = MachineReport(nodes, arcs, acc, incomplete, "s", {"auto": "on"}, 0, terminals, records, 1.5)
    assert read_machine_report(report.render()).render() == report.render()


def test_render_text_mentions_traces():
    text = render_text(explore(scenario("mini_flank_17").with_modes(flank=False)))
    assert "Head2Side(D0,D1@102T)" in text
    assert "1. request(15(2))" in text


def test_render_flank_verdict():
    text = render_flank_verdict(flank_check(scenario("mini_flank_17")))
    assert text.splitlines()[0].endswith("PASS")
    assert "shortest trace" in text
