from __future__ import annotations

import json

import pytest

from automl_agent.coding import (
    FINISH,
    FIX,
    NO_RESULTS,
    UNPARSEABLE,
    Decision,
    LoopConfig,
    build_shell_prompt,
    build_solution_prompt,
    judge_execution,
    run_iterative_loop,
)
from automl_agent.config import config_from_dict
from automl_agent.semantic import KnowledgeDocument

FAIL = "```bash\necho 'KeyError: rings' >&2\nexit 1\n```"
PASS = "```bash\nprintf 'id,y\\n0,1\\n' > results.csv\necho trained\n```"
CODE = "```python\nprint('train')\n```"
ANALYSIS = "ERROR SUMMARY: KeyError on rings.\nSUGGESTED FIX: use the right label column."
FINISHED = "DECISION: FINISH\nANALYSIS: None"


def test_solution_prompt_carries_tool_prompt(context, tool, tmp_path):
    docs = [KnowledgeDocument("t", "Fit", "Summary: s", "fit body")]
    prompt = build_solution_prompt(context, tmp_path, "use 5 folds", "ERROR SUMMARY: x", docs)
    assert prompt.startswith("As an AutoML Agent")
    assert f"Please generate Python code using {tool.name}" in prompt
    assert tool.tool_prompt in prompt and "use 5 folds" in prompt
    assert "Task Description: Predict y from x." in prompt
    assert prompt.endswith("ERROR SUMMARY: x\n\nRelevant Tutorials:\n\n### Fit\nfit body\n")


@pytest.mark.parametrize(
    "venv, install, expected",
    [
        (True, False, "1. Create and configure a conda environment in /out:"),
        (False, True, "1. The environment may not be fully configured."),
        (False, False, "1. The environment is already configured. Do not install or update any package."),
    ],
)
def test_shell_prompt_branches(venv, install, expected):
    cfg = LoopConfig(create_venv=venv, install_packages=install)
    prompt = build_shell_prompt("print(1)", "/out/gen.py", "/out", cfg)
    assert expected in prompt and "Execute the Python script: /out/gen.py" in prompt
    assert "Previous error" not in prompt


def test_shell_prompt_includes_history_only_with_an_error():
    cfg = LoopConfig()
    with_error = build_shell_prompt("new", "/o/g.py", "/o", cfg, "old.sh", "old.py", "boom")
    assert "Previous error:\nboom" in with_error
    assert "Previous failed bash script:\n```bash\nold.sh\n```" in with_error
    without = build_shell_prompt("new", "/o/g.py", "/o", cfg, "old.sh", "old.py", None)
    assert "old.sh" not in without


def test_judge_parses_and_defaults_to_fix(scripted):
    llm = scripted({"executer": ["**DECISION:** [FINISH]\nANALYSIS: None"]})
    assert judge_execution("t", "d", "c", "out", "", llm) == Decision(FINISH, "None")
    llm = scripted({"executer": ["looks fine", "still prose"]})
    assert judge_execution("t", "d", "c", "", "", llm) == Decision(FIX, UNPARSEABLE)
    assert llm.calls_for("executer") == 2


def _loop(context, llm, tmp_path, **cfg):
    return run_iterative_loop(context, [], LoopConfig(kill_grace_seconds=1, **cfg), llm, tmp_path / "out")


def test_fail_then_pass(context, scripted, tmp_path):
    llm = scripted({
        "coder": [CODE, CODE],
        "bash_coder": [FAIL, PASS],
        "error_analyzer": [ANALYSIS],
        "executer": [FINISHED],
    })
    outcome = _loop(context, llm, tmp_path)
    assert outcome.success and outcome.iterations_used == 2
    assert outcome.results_path.name == "results.csv"
    second = llm.prompts_for("coder")[1]
    assert "ERROR SUMMARY: KeyError on rings.\n\nSUGGESTED FIX: use the right label column." in second
    assert "Previous error:\nKeyError: rings" in llm.prompts_for("bash_coder")[1]
    lines = (tmp_path / "out" / "episodic.jsonl").read_text().splitlines()
    assert [json.loads(line)["t"] for line in lines] == [0, 1]
    assert (tmp_path / "out" / "generated_code_1.py").read_text() == "print('train')\n"
    assert (tmp_path / "out" / "iterations" / "1" / "coder_prompt.txt").read_text() == second


def test_clean_run_overridden_by_judge(context, scripted, tmp_path):
    llm = scripted({
        "coder": [CODE],
        "bash_coder": [PASS],
        "executer": ["DECISION: FIX\nANALYSIS: accuracy is 0.0, labels were shuffled"],
        "error_analyzer": [ANALYSIS],
    })
    outcome = _loop(context, llm, tmp_path, max_iterations=1)
    assert not outcome.success
    assert outcome.episodic_store[0].executer_analysis.startswith("accuracy is 0.0")


def test_finish_without_results_file_is_downgraded(context, scripted, tmp_path):
    llm = scripted({
        "coder": [CODE],
        "bash_coder": ["```bash\necho ok\n```"],
        "executer": [FINISHED],
        "error_analyzer": [ANALYSIS],
    })
    outcome = _loop(context, llm, tmp_path, max_iterations=1)
    assert not outcome.success and outcome.episodic_store[0].executer_analysis == NO_RESULTS


def test_timeout_counts_as_failure(context, scripted, tmp_path):
    llm = scripted({"coder": [CODE], "bash_coder": ["```bash\nsleep 30\n```"], "error_analyzer": [ANALYSIS]})
    outcome = _loop(context, llm, tmp_path, max_iterations=1, per_execution_timeout_seconds=0.5)
    record = outcome.episodic_store[0]
    assert record.return_code == -1 and "timed out" in record.executer_analysis


def test_user_input_is_truncated(context, scripted, tmp_path):
    llm = scripted({"coder": [CODE], "bash_coder": [PASS], "executer": [FINISHED]})
    run_iterative_loop(
        context, [], LoopConfig(max_user_input_length=100), llm, tmp_path / "out", user_input="u" * 5000
    )
    prompt = llm.prompts_for("coder")[0]
    assert "u" * 51 not in prompt and "u" * 50 + "\n...(truncated)\n" in prompt


def test_loop_config_from_kernel():
    cfg = LoopConfig.from_kernel(config_from_dict({"episodic_memory": {"mode": "multi_turn"}}))
    assert cfg.multi_turn_coder and cfg.max_iterations == 5 and cfg.max_stdout_length == 8192
    with pytest.raises(ValueError):
        LoopConfig(max_iterations=0)
