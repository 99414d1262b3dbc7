import math
import os

import pytest

from segbreak.datamodel import SegmentedCoefficients
from segbreak.ingest import SyntheticConfig

_ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    group = parser.getgroup("segbreak")
    group.addoption(
        "--replication-csv",
        default=os.environ.get("SEGBREAK_REPLICATION_CSV"),
        help="per-person replication CSV for the conditional replication checks",
    )
    group.addoption("--replication-income-col", default="income")
    group.addoption("--replication-wellbeing-col", default="wellbeing")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(name: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


TRUE_TAU = 175000.0


def jump_coefficients(gap: float = 1.0) -> SegmentedCoefficients:
    """b = 0.5 below, flat above, intercept jump of ``gap`` at the break."""
    a = 1.0
    return SegmentedCoefficients(a, 0.5, a + 0.5 * math.log(TRUE_TAU) + gap, 0.0, TRUE_TAU)


def continuous_coefficients() -> SegmentedCoefficients:
    a = 1.0
    return SegmentedCoefficients(a, 0.5, a + 0.5 * math.log(TRUE_TAU), 0.0, TRUE_TAU)


@pytest.fixture
def jump_config() -> SyntheticConfig:
    return SyntheticConfig(jump_coefficients(), noise_sd=1.0, n=2000, seed=11)


@pytest.fixture
def noiseless_config() -> SyntheticConfig:
    return SyntheticConfig(jump_coefficients(), noise_sd=0.0, n=600, seed=3)
