import numpy as np
import pytest

ACCEPTANCE_LINES = []


def direct_eval(coeffs, t):
    """Brute-force sum_k a_k e^{ikt}; independent of the FFT path."""
    coeffs = np.asarray(coeffs, dtype=complex)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(coeffs.size)
    return np.exp(1j * np.outer(t, k)) @ coeffs


def grid_t(M):
    return 2 * np.pi * np.arange(M) / M


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record_acceptance(label, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {label}" + (f" -- {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
