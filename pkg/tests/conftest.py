from __future__ import annotations

import pytest

from swarmlearn.config import ExperimentConfig

ACCEPTANCE_LINES: list[str] = []


def small_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig().with_overrides(**{
        "robot.count": 6, "env.token_count": 20, "run.max_iterations": 300,
        "run.runs": 2, "run.epoch": 100})
    return base.with_overrides(**overrides) if overrides else base


@pytest.fixture
def cfg() -> ExperimentConfig:
    return small_config()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
