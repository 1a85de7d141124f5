from __future__ import annotations

import os
from pathlib import Path

import pytest

from prompt_scenario import collect_prompts

GOLDEN = Path(__file__).parent / "golden"
EXPECTED = [
    "file_reader_0", "description_finder_0", "task_describer_0", "tool_selector_0",
    "condenser_0", "condenser_1", "summarizer_0", "retriever_0", "retriever_1",
    "coder_0", "coder_1", "bash_coder_0", "bash_coder_1", "error_analyzer_0", "executer_0",
    "shell_venv", "shell_install", "shell_configured",
]


@pytest.fixture(scope="module")
def prompts(tmp_path_factory):
    collected = collect_prompts(tmp_path_factory.mktemp("golden"))
    if os.environ.get("UPDATE_GOLDEN") == "1":
        GOLDEN.mkdir(exist_ok=True)
        for name, text in collected.items():
            (GOLDEN / f"{name}.txt").write_text(text)
    return collected


def test_every_prompt_was_assembled(prompts):
    assert sorted(prompts) == sorted(EXPECTED)


@pytest.mark.parametrize("name", EXPECTED)
def test_prompt_matches_golden(prompts, name):
    assert prompts[name] == (GOLDEN / f"{name}.txt").read_text()


@pytest.mark.parametrize(
    "name, phrase",
    [
        ("coder_0", "As an AutoML Agent"),
        ("retriever_0", "Respond ONLY with the numbers"),
        ("executer_0", "DECISION: [FINISH or FIX]"),
        ("condenser_1", "This is a continuation of the previous chunk. "),
        ("coder_1", "ERROR SUMMARY: The label column name is misspelled."),
    ],
)
def test_spot_checks(prompts, name, phrase):
    assert phrase in (GOLDEN / f"{name}.txt").read_text()
