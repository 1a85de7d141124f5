"""Iterative coding loop: write code, write a launcher, run, judge, repeat."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import prompts
from .config import KernelConfig, ToolSpec
from .episodic import (
    EpisodicStore,
    ErrorContext,
    IterationRecord,
    analyze_error,
    error_context_for,
    raw_error_block,
    record_iteration,
)
from .llm import Gateway
from .parsing import ParseError, extract_fenced_block, parse_labeled_fields, truncate_middle
from .perception import PerceptionContext
from .sandbox import ExecutionResult, Workspace, execute_shell_script, prepare_workspace
from .semantic import KnowledgeDocument, RetrievalQuery, render_retrieved, retrieve_documents

log = logging.getLogger(__name__)

FINISH = "Finish"
FIX = "Fix"
UNPARSEABLE = "unparseable judgment"
NO_RESULTS = "no results file produced"


@dataclass(frozen=True)
class LoopConfig:
    max_iterations: int = 5
    per_execution_timeout_seconds: float = 10800
    max_error_message_length: int = 2048
    max_stdout_length: int = 8192
    max_stderr_length: int = 2048
    max_user_input_length: int = 2048
    create_venv: bool = False
    install_packages: bool = False
    multi_turn_coder: bool = False
    episodic_mode: str = "default"
    semantic_enabled: bool = True
    max_num_tutorials: int = 5
    index_mode: str = "by_summary"
    stream_output: bool = False
    command_prefix: str | None = None
    kill_grace_seconds: float = 10.0

    def __post_init__(self) -> None:
        caps = (
            self.max_iterations,
            self.per_execution_timeout_seconds,
            self.max_error_message_length,
            self.max_stdout_length,
            self.max_stderr_length,
            self.max_user_input_length,
        )
        if min(caps) <= 0:
            raise ValueError("loop caps must be positive")

    @classmethod
    def from_kernel(cls, cfg: KernelConfig) -> "LoopConfig":
        mode = cfg.episodic_memory.mode
        return cls(
            max_iterations=cfg.max_iterations,
            per_execution_timeout_seconds=cfg.per_execution_timeout,
            max_error_message_length=cfg.max_error_message_length,
            max_stdout_length=cfg.max_stdout_length,
            max_stderr_length=cfg.max_stderr_length,
            max_user_input_length=cfg.max_user_input_length,
            create_venv=cfg.create_venv,
            install_packages=cfg.install_packages,
            multi_turn_coder=mode == "multi_turn" or cfg.coder.multi_turn,
            episodic_mode=mode,
            semantic_enabled=cfg.semantic_memory.enabled,
            max_num_tutorials=cfg.max_num_tutorials,
            index_mode=cfg.semantic_memory.index_mode,
            stream_output=cfg.stream_output,
            command_prefix=cfg.sandbox.command_prefix,
            kill_grace_seconds=cfg.sandbox.kill_grace_seconds,
        )


@dataclass(frozen=True)
class Decision:
    verdict: str
    analysis: str

    def __post_init__(self) -> None:
        if self.verdict not in (FINISH, FIX):
            raise ValueError(f"verdict must be {FINISH} or {FIX}")
        if not self.analysis:
            raise ValueError("analysis must be nonempty")


def build_solution_prompt(
    ctx: PerceptionContext,
    output_folder: str | Path,
    user_input: str,
    error_block: str,
    retrieved_docs: Sequence[KnowledgeDocument],
    tool: ToolSpec | None = None,
    *,
    include_tool_prompt: bool = True,
) -> str:
    """Coder prompt; without external knowledge only the library name is given."""
    tool = tool or ctx.selected_tool
    return prompts.coder_prompt(
        tool_name=tool.name,
        output_folder=str(output_folder),
        tool_prompt=tool.tool_prompt if include_tool_prompt else "",
        task_description=ctx.task_description,
        data_prompt=ctx.data_prompt,
        user_input=user_input,
        error_block=error_block,
        retrieved_block=render_retrieved(retrieved_docs),
    )


def build_shell_prompt(
    python_code: str,
    python_path: str | Path,
    output_folder: str | Path,
    cfg: LoopConfig,
    previous_shell: str | None = None,
    previous_code: str | None = None,
    error_message: str | None = None,
) -> str:
    return prompts.shell_prompt(
        python_file_path=str(python_path),
        output_folder=str(output_folder),
        create_venv=cfg.create_venv,
        install_packages=cfg.install_packages,
        current_python=python_code,
        error_message=error_message,
        previous_bash=previous_shell,
        previous_python=previous_code,
    )


def _verdict(fields: dict[str, str]) -> Decision | None:
    token = fields["DECISION:"].strip().strip("[]*").strip().split()
    if not token:
        return None
    word = token[0].strip(".,:;*").upper()
    analysis = fields["ANALYSIS:"].strip() or "None"
    if word == "FINISH":
        return Decision(FINISH, analysis)
    if word == "FIX":
        return Decision(FIX, analysis)
    return None


def judge_execution(
    task_prompt: str, data_prompt: str, code: str, stdout: str, stderr: str, llm: Gateway
) -> Decision:
    """Ask the executer agent for FINISH/FIX; unparseable twice means Fix."""
    prompt = prompts.executer_prompt(task_prompt, data_prompt, code, stdout, stderr)
    for attempt in range(2):
        response = llm.ask("executer", "planner", prompt if attempt == 0 else prompt + prompts.FORMAT_REMINDER)
        try:
            decision = _verdict(parse_labeled_fields(response, ["DECISION:", "ANALYSIS:"]))
        except ParseError:
            decision = None
        if decision is not None:
            return decision
    return Decision(FIX, UNPARSEABLE)


@dataclass
class RunOutcome:
    success: bool
    iterations_used: int
    episodic_store: EpisodicStore
    results_path: Path | None = None
    stop_reason: str = ""


def _code_from(response: str, tag: str) -> str:
    try:
        return extract_fenced_block(response, tag)
    except ParseError:
        log.warning("no ```%s block in response; using the raw text", tag)
        return response.strip()


def find_results_file(folder: Path) -> Path | None:
    hits = sorted(p for p in folder.glob("results.*") if p.is_file())
    return hits[0] if hits else None


def run_iterative_loop(
    ctx: PerceptionContext,
    kb: Sequence[KnowledgeDocument],
    cfg: LoopConfig,
    llm: Gateway,
    output_folder: str | Path,
    *,
    user_input: str = "",
    user_input_provider: Callable[[int], str] | None = None,
    wall_limit_seconds: float | None = None,
    executor: Callable[..., ExecutionResult] = execute_shell_script,
) -> RunOutcome:
    """Generate, execute and judge solutions until success or the iteration cap."""
    workspace: Workspace = prepare_workspace(output_folder)
    root = workspace.root
    store = EpisodicStore(path=root / "episodic.jsonl")
    store.path.write_text("")
    tool = ctx.selected_tool
    mode = cfg.episodic_mode
    started = time.monotonic()

    history: list[tuple[str, str]] = []
    error_prompt = ""  # R_t text used for retrieval and injection
    error_message = ""  # truncated raw error for the shell prompt
    previous_code: str | None = None
    previous_shell: str | None = None

    for t in range(cfg.max_iterations):
        remaining = None
        if wall_limit_seconds is not None:
            remaining = wall_limit_seconds - (time.monotonic() - started)
            if remaining <= 0:
                return RunOutcome(False, t, store, stop_reason="wall limit reached")

        extra = user_input_provider(t) if user_input_provider else ""
        turn_input = "\n".join(part for part in (user_input, extra) if part)
        turn_input = truncate_middle(turn_input, cfg.max_user_input_length) if turn_input else ""

        docs: list[KnowledgeDocument] = []
        if cfg.semantic_enabled and kb and cfg.max_num_tutorials > 0:
            query = RetrievalQuery(
                ctx.task_prompt, ctx.data_prompt, turn_input, error_prompt, cfg.max_num_tutorials
            )
            docs = retrieve_documents(query, kb, llm, cfg.index_mode)

        iteration_dir = workspace.iterations / str(t)
        iteration_dir.mkdir(parents=True, exist_ok=True)

        if cfg.multi_turn_coder and t > 0:
            prompt = prompts.feedback_turn(error_prompt, render_retrieved(docs))
        else:
            injected = "" if cfg.multi_turn_coder else error_prompt
            prompt = build_solution_prompt(
                ctx, root, turn_input, injected, docs, tool, include_tool_prompt=cfg.semantic_enabled
            )
        (iteration_dir / "coder_prompt.txt").write_text(prompt)
        response = llm.ask("coder", "coder", prompt, history=history if cfg.multi_turn_coder else ())
        if cfg.multi_turn_coder:
            history.extend([("user", prompt), ("assistant", response)])
        code = _code_from(response, "python")
        code_path = root / f"generated_code_{t}.py"
        code_path.write_text(code + "\n")

        shell_prompt = build_shell_prompt(
            code, code_path, root, cfg, previous_shell, previous_code, error_message or None
        )
        (iteration_dir / "shell_prompt.txt").write_text(shell_prompt)
        shell = _code_from(llm.ask("bash_coder", "coder", shell_prompt), "bash")

        timeout = cfg.per_execution_timeout_seconds
        if remaining is not None:
            timeout = max(1.0, min(timeout, remaining))
        result = executor(
            shell,
            workspace,
            timeout,
            name=f"run_{t}.sh",
            stdout_log=root / f"stdout_{t}.log",
            stderr_log=root / f"stderr_{t}.log",
            max_stdout_length=cfg.max_stdout_length,
            max_stderr_length=cfg.max_stderr_length,
            stream_output=cfg.stream_output,
            command_prefix=cfg.command_prefix,
            kill_grace_seconds=cfg.kill_grace_seconds,
        )

        results_path = None
        if result.return_code == 0:
            decision = judge_execution(ctx.task_prompt, ctx.data_prompt, code, result.stdout, result.stderr, llm)
            if decision.verdict == FINISH:
                results_path = find_results_file(root)
                if results_path is None:
                    decision = Decision(FIX, NO_RESULTS)
        elif result.timed_out:
            decision = Decision(FIX, f"Execution timed out after {timeout:g} seconds.")
        else:
            decision = Decision(FIX, f"Execution failed with return code {result.return_code}.")

        error_context: ErrorContext | None = None
        if decision.verdict == FIX:
            error_message = truncate_middle(result.stderr.strip() or decision.analysis, cfg.max_error_message_length)
            if mode in ("default", "without_fix"):
                try:
                    error_context = analyze_error(
                        ctx.task_prompt, ctx.data_prompt, turn_input, code, shell,
                        render_retrieved(docs), error_message, llm, mode=mode,
                    )
                except ParseError as exc:
                    log.warning("error analysis unparseable (%s); falling back to raw logs", exc)

        record = IterationRecord(
            index=t,
            solution_code=code,
            shell_script=shell,
            stdout=result.stdout,
            stderr=result.stderr,
            return_code=result.return_code,
            wall_seconds=result.wall_seconds,
            retrieved_titles=tuple(doc.title for doc in docs),
            error_context=error_context,
            executer_analysis=decision.analysis,
            verdict=decision.verdict,
            code_path=str(code_path),
            script_path=str(root / f"run_{t}.sh"),
            stdout_path=str(root / f"stdout_{t}.log"),
            stderr_path=str(root / f"stderr_{t}.log"),
        )
        record_iteration(store, record)

        if decision.verdict == FINISH:
            return RunOutcome(True, t + 1, store, results_path, "finished")

        if mode == "multi_turn":
            error_prompt = raw_error_block(error_message, decision.analysis, cfg.max_error_message_length)
        else:
            error_prompt = error_context_for(store, t + 1, mode, cfg.max_error_message_length)
            if not error_prompt:
                error_prompt = raw_error_block(error_message, decision.analysis, cfg.max_error_message_length)
        previous_code, previous_shell = code, shell

    return RunOutcome(False, cfg.max_iterations, store, stop_reason="iteration limit reached")
