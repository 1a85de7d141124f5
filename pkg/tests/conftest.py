from __future__ import annotations

import pytest

from automl_agent.config import ToolSpec, config_from_dict
from automl_agent.llm import Gateway, ScriptedBackend
from automl_agent.perception import PerceptionContext


@pytest.fixture
def scripted():
    """Factory for a gateway over a scripted backend with no retry sleeps."""

    def make(responses) -> Gateway:
        return Gateway(ScriptedBackend(responses), sleep=lambda _: None)

    return make


@pytest.fixture
def tool() -> ToolSpec:
    return ToolSpec(
        name="autogluon.tabular",
        version="1.2",
        description="Tabular AutoML",
        features=("tabular",),
        requirements=(),
        prompt_template=("Use TabularPredictor.", "Keep presets light."),
    )


@pytest.fixture
def context(tool) -> PerceptionContext:
    return PerceptionContext(
        data_prompt="----------\ntrain.csv\nContent:\nColumn names: ['x', 'y']\n----------",
        task_description="Predict y from x. Metric: rmse.",
        selected_tool=tool,
    )


@pytest.fixture
def kernel_cfg():
    return config_from_dict({})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
