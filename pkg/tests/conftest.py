import numpy as np
import pytest

from photonblind.fields import project_kernel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_kernel(rng, m):
    return project_kernel(rng.uniform(0.0, 1.0, (m, m)))


#: ``(number, passed, detail)`` lines filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
