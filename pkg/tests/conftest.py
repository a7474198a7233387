from __future__ import annotations

from pathlib import Path

import pytest

from interlocking.cli import fixtures_dir
from interlocking.kernel import StationModel
from interlocking.layout import parse_layout
from interlocking.scenario import load_scenario
from interlocking.table import parse_table

FIXTURES = fixtures_dir()
GOLDEN = Path(__file__).parent / "golden"

ALL_SCENARIOS = sorted(p.stem for p in FIXTURES.glob("*.scenario"))
# scenarios without fault injection: the safety theorem must hold on these
SAFE_SCENARIOS = [s for s in ALL_SCENARIOS if load_scenario(FIXTURES / f"{s}.scenario").modes.removed_signals == ()]


def scenario(name: str):
    return load_scenario(FIXTURES / f"{name}.scenario")


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def mini_layout():
    return parse_layout(fixture_text("mini_panthong.layout"))


@pytest.fixture(scope="session")
def mini_table():
    return parse_table(fixture_text("mini_panthong.table"))


@pytest.fixture(scope="session")
def tiny_layout():
    return parse_layout(fixture_text("tiny_loop.layout"))


@pytest.fixture(scope="session")
def tiny_table():
    return parse_table(fixture_text("tiny_loop.table"))


@pytest.fixture
def mini_model(mini_layout, mini_table):
    return StationModel(mini_layout, mini_table, queues={"N": ("D1", "D2"), "S": ("U1", "U2")})


@pytest.fixture
def tiny_model(tiny_layout, tiny_table):
    return StationModel(tiny_layout, tiny_table, queues={"E": ("T1", "T2")})


# -- acceptance reporting ------------------------------------------------------
# tests marked @pytest.mark.acceptance(n, title) get one PASS/FAIL line each in
# the terminal summary; a criterion passes only if every test carrying it passed

_acceptance: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    entry = _acceptance.setdefault(number, [title, True])
    entry[1] = entry[1] and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"criterion {number} {title}: {'PASS' if ok else 'FAIL'}")
