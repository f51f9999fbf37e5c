import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from twistlab.fock import StateVector, basis  # noqa: E402


def random_state(l, n, rng, real=False):
    b = basis(l, n)
    x = rng.standard_normal(b.dim)
    if not real:
        x = x + 1j * rng.standard_normal(b.dim)
    return StateVector(b, x / np.linalg.norm(x))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def report(request):
    """Record a one-line acceptance verdict, echoed in the terminal summary."""
    lines = request.config.stash[_LINES]

    def emit(number, ok, detail, seconds):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({seconds:.2f} s)"
        print(line)
        lines.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
