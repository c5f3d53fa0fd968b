"""Shared fixtures and the acceptance-criteria summary."""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache

import numpy as np
import pytest

from polarqo.fock import build_basis
from polarqo.polarization import build_polarization_ops

CRITERIA = {
    1: "algebra: commutators and biphoton complementarity",
    2: "basis states: simultaneous eigenstates, orthonormal blocks",
    3: "overlap closed form vs brute force (200 draws)",
    4: "identity resolution with exactness-bound quadrature",
    5: "Q-functions: reduced closed form, thermal values, Bessel form",
    6: "characteristic functions vs eigendecomposition",
    7: "squeezing numbers and unpolarized classification",
    8: "geometric phase: convergence, scalar states, Glauber split",
    9: "uncertainty triples on 500 random states",
}

_outcomes: dict = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        note = ""
        if rep.failed:
            note = str(rep.longrepr.reprcrash.message).splitlines()[0] if hasattr(
                rep.longrepr, "reprcrash") else "error"
        _outcomes[marker.args[0]].append((item.name, rep.outcome, note))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, desc in CRITERIA.items():
        runs = _outcomes.get(n)
        if not runs:
            tr.write_line(f"criterion {n}: NOT RUN  {desc}")
            continue
        failed = [r for r in runs if r[1] != "passed"]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {n}: {status}  {desc} ({len(runs) - len(failed)}/{len(runs)} checks)"
        for name, _, note in failed:
            line += f"\n    failing: {name}: {note}"
        tr.write_line(line)


@lru_cache(maxsize=None)
def _basis(m, n_max):
    return build_basis(m, n_max)


@lru_cache(maxsize=None)
def _ops(m, n_max):
    return build_polarization_ops(_basis(m, n_max))


@pytest.fixture
def basis():
    return _basis


@pytest.fixture
def ops():
    return _ops


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
