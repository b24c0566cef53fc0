import numpy as np
import pytest

from weakflip.protocol import from_profile, validate

S = np.sqrt(0.5)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def bell_half():
    return validate(2, 2, [S, 0, 0, S], np.eye(2) / 2)


@pytest.fixture
def bell_proj():
    return from_profile([0.5, 0.5], [1.0, 0.0])


@pytest.fixture
def skewed():
    return from_profile([0.5, 0.5], [0.9, 0.1])


def brute_partial_trace_a(m, da, db):
    out = np.zeros((db, db), dtype=complex)
    for j in range(db):
        for k in range(db):
            for i in range(da):
                out[j, k] += m[i * db + j, i * db + k]
    return out


def brute_partial_trace_b(m, da, db):
    out = np.zeros((da, da), dtype=complex)
    for i in range(da):
        for k in range(da):
            for j in range(db):
                out[i, k] += m[i * db + j, k * db + j]
    return out
