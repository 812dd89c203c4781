import numpy as np
import pytest

# P_9 and its two rearrangements, transcribed row by row from the published matrices
P9_ROWS = "000001000 000000010 100000000 000000100 001000000 000010000 010000000 000100000 000000001"
P9_R_ROWS = "000000100 001000000 000010000 000001000 000000010 100000000 010000000 000100000 000000001"
P9_G_ROWS = "001000000 000000010 000100000 000000100 000001000 010000000 000010000 100000000 000000001"


def bits(rows):
    return np.array([[int(c) for c in r] for r in rows.split()], dtype=float)


def haar(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def P9():
    return bits(P9_ROWS)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
