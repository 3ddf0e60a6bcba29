from __future__ import annotations

from importlib import resources

import pytest
from hypothesis import HealthCheck, settings

from belief_arena.formats import parse_game

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = ("g_coin", "g_safe", "g_pennies", "g_pennies_trap")


def fixture_game(name: str):
    text = resources.files("belief_arena.corpus").joinpath(f"{name}.game").read_text()
    return parse_game(text, name=name)


@pytest.fixture(scope="session")
def coin():
    return fixture_game("g_coin")


@pytest.fixture(scope="session")
def safe():
    return fixture_game("g_safe")


@pytest.fixture(scope="session")
def pennies():
    return fixture_game("g_pennies")


@pytest.fixture(scope="session")
def trap():
    return fixture_game("g_pennies_trap")


ACCEPTANCE_LINES: dict = {}  # criterion number -> report line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
