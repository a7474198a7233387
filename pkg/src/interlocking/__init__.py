"""Explicit-state verification of railway interlocking tables."""

from .explorer import (
    StateSpaceReport,
    classify_terminals,
    explore,
    flank_check,
    successors,
    trace_to,
)
from .layout import LayoutGraph, parse_layout, remove_signal
from .oracle import brute_force_oracle
from .scenario import Scenario, load_scenario, parse_scenario
from .table import InterlockingTable, parse_table, validate_table

__all__ = [
    "InterlockingTable",
    "LayoutGraph",
    "Scenario",
    "StateSpaceReport",
    "brute_force_oracle",
    "classify_terminals",
    "explore",
    "flank_check",
    "load_scenario",
    "parse_layout",
    "parse_scenario",
    "parse_table",
    "remove_signal",
    "successors",
    "trace_to",
    "validate_table",
]
