from pathlib import Path

import numpy as np
import pytest

from macc.harness import example_setup

GOLDEN = Path(__file__).parent / "golden"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if passed else 'FAIL'} {detail}")


@pytest.fixture
def example():
    """(params, table, demands, symbolic state) for the nine-user worked example."""
    return example_setup()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
