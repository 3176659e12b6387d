"""Shared fixtures and the acceptance-summary reporting hook."""

import numpy as np
import pytest

# Filled by tests/test_acceptance.py: criterion number -> (ok, one-line detail).
ACCEPTANCE = {}


def record_acceptance(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), str(detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {verdict} - {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


@pytest.fixture
def record():
    return record_acceptance
