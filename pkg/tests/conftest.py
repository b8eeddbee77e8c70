import numpy as np
import pytest

ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def record_criterion():
    def record(number, passed, text):
        ACCEPTANCE[number] = (bool(passed), text)
        print(f"Criterion {number:2d}: {'PASS' if passed else 'FAIL'} {text}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"Criterion {number:2d}: {'PASS' if passed else 'FAIL'} {text}")
