import numpy as np
import pytest

from hcurl_ife import CoefficientPair

EXPERIMENT_SETS = [
    CoefficientPair(1.0, mu_p, 1.0, beta_p) for mu_p in (0.1, 0.01) for beta_p in (10.0, 100.0)
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_right_triangle():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance (sub-)criterion."""

    def add(label: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'} {label}: {detail}".rstrip(": "))
        print(ACCEPTANCE_LINES[-1])
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
