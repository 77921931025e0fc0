"""Shared fixtures: SCF solutions are expensive, so they are cached per session."""

from __future__ import annotations

import time

import pytest

from hflab.grid import build_grid
from hflab.scf.atoms import builtin_atom
from hflab.scf.solver import solve

_CACHE: dict = {}
ACCEPTANCE_LINES: list = []


def scf(symbol: str, scheme: str = "hf", points: int = 2000):
    """Session-cached SCF result on the default log grid (r_min=1e-6, r_max=60)."""
    key = (symbol, scheme, points)
    if key not in _CACHE:
        if ("grid", points) not in _CACHE:
            _CACHE[("grid", points)] = build_grid(1e-6, 60.0, points)
        t0 = time.perf_counter()
        res = solve(builtin_atom(symbol), _CACHE[("grid", points)], scheme)
        _CACHE[("time",) + key] = time.perf_counter() - t0
        _CACHE[key] = res
    return _CACHE[key]


def scf_time(symbol: str, scheme: str = "hf", points: int = 2000) -> float:
    scf(symbol, scheme, points)
    return _CACHE[("time", symbol, scheme, points)]


@pytest.fixture(scope="session")
def default_grid():
    scf("H")
    return _CACHE[("grid", 2000)]


@pytest.fixture(scope="session")
def he_hf():
    return scf("He", "hf", 800)


@pytest.fixture(scope="session")
def he_hartree():
    return scf("He", "hartree", 800)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
